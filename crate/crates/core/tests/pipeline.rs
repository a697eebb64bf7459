//! End-to-end runs of the library on the bundled sample.

use std::path::PathBuf;

use proptest::prelude::*;

use toxspans::baselines::{Baseline, BaselineMethod, TaggerConfig};
use toxspans::corpus::{load_toxic_spans, AnnotatedPost, Resources};
use toxspans::crf::io::{load_manifest, load_model, save_model, Manifest, MODEL_VERSION};
use toxspans::crf::{fit_crf_posts, CrfConfig};
use toxspans::ensemble::{combine_predictions, EnsembleMode};
use toxspans::harness::{read_report, run_crossval, write_report, Example, Report, RunMeta};
use toxspans::predictions::{load_predictions, save_predictions, Prediction};
use toxspans::span::corpus_f1;
use toxspans::CharIndexSet;

fn sample() -> Vec<AnnotatedPost> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sample_spans.csv");
    load_toxic_spans(path, None).unwrap().0
}

fn small_crf() -> CrfConfig {
    let mut cfg = CrfConfig::default();
    cfg.features.hash_bits = 14;
    cfg.train.epochs = 3;
    cfg.train.seed = 5;
    cfg
}

fn score(posts: &[AnnotatedPost], preds: &[Prediction]) -> f64 {
    corpus_f1(preds.iter().map(|p| &p.spans).zip(posts.iter().map(|p| &p.gold))).unwrap()
}

#[test]
fn sample_loads_with_row_ids() {
    let posts = sample();
    assert_eq!(posts.len(), 200);
    assert_eq!(posts[0].id, "0");
    assert!(posts.iter().any(|p| p.gold.is_empty()));
    assert!(posts.iter().any(|p| !p.text.is_ascii()));
}

#[test]
fn crf_model_survives_disk_and_predicts_the_same() {
    let posts = sample();
    let res = Resources::builtin();
    let cfg = small_crf();
    let (model, outcome) = fit_crf_posts(&posts, &res, &cfg).unwrap();
    assert_eq!(outcome.loss_trace.len(), cfg.train.epochs);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("crf.bin");
    let manifest = Manifest {
        format_version: MODEL_VERSION,
        seed: cfg.train.seed,
        features: cfg.features.clone(),
        shape: model.params.shape,
        train: cfg.train.clone(),
        training_rows: posts.len(),
        loss_trace: outcome.loss_trace.clone(),
    };
    save_model(&path, &model, Some(&manifest)).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(load_manifest(&path).unwrap(), manifest);

    for p in &posts {
        assert_eq!(
            loaded.predict_post(&p.id, &p.text, &res).unwrap(),
            model.predict_post(&p.id, &p.text, &res).unwrap()
        );
    }
}

#[test]
fn baselines_ensemble_through_prediction_files() {
    let posts = sample();
    let res = Resources::builtin();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for method in [BaselineMethod::Hate, BaselineMethod::Sentiment, BaselineMethod::Combined] {
        let b = Baseline::new(method, TaggerConfig::default(), res.hate.clone(), res.sentiment.clone()).unwrap();
        let preds: Vec<Prediction> = posts
            .iter()
            .map(|p| Prediction::new(&p.id, b.predict(&p.id, &p.text)))
            .collect();
        let path = dir.path().join(format!("{method:?}.tsv"));
        save_predictions(&path, &preds).unwrap();
        files.push(load_predictions(&path).unwrap());
        assert_eq!(files.last().unwrap(), &preds);
    }
    let vote = combine_predictions(EnsembleMode::Vote, &files).unwrap();
    let both = combine_predictions(EnsembleMode::Intersect, &files).unwrap();
    for (k, (v, i)) in vote.iter().zip(&both).enumerate() {
        assert!(i.spans.is_subset(&v.spans));
        assert!(files.iter().all(|f| i.spans.is_subset(&f[k].spans)));
    }
    let hate = score(&posts, &files[0]);
    let combined = score(&posts, &files[2]);
    assert!(hate > 0.0 && combined > 0.0);
}

#[test]
fn crossval_report_round_trips() {
    let posts = sample();
    let examples: Vec<Example> = posts.into_iter().map(Example::plain).collect();
    let method = toxspans::harness::CrfMethod {
        config: small_crf(),
        resources: Resources::builtin(),
        use_embeddings: false,
    };
    let first = run_crossval(&method, &examples, 3, 9).unwrap();
    let second = run_crossval(&method, &examples, 3, 9).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.folds.iter().map(|f| f.test_size).sum::<usize>(), examples.len());

    let report = Report {
        meta: RunMeta {
            tool_version: "test".into(),
            seed: 9,
            folds: 3,
            config_hash: "0".repeat(16),
            dataset: "sample".into(),
            rows: examples.len(),
        },
        methods: vec![first],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cv.json");
    let table = write_report(&report, &path).unwrap();
    assert!(std::fs::read_to_string(table).unwrap().contains("crf"));
    assert_eq!(read_report(&path).unwrap(), report);
}

proptest! {
    #[test]
    fn prediction_files_round_trip(
        rows in prop::collection::btree_map("[a-z0-9 ]{1,8}", prop::collection::vec(0usize..500, 0..30), 0..20)
    ) {
        let preds: Vec<Prediction> = rows
            .into_iter()
            .map(|(id, idx)| Prediction::new(id, CharIndexSet::from_unsorted(idx)))
            .collect();
        let mut buf = Vec::new();
        toxspans::predictions::write_predictions(&mut buf, &preds).unwrap();
        prop_assert_eq!(toxspans::predictions::read_predictions(buf.as_slice()).unwrap(), preds);
    }
}
