//! Seeded k-fold cross-validation over any tagger, with reports.

mod config;
mod methods;
mod report;

pub use config::{
    config_hash, resolve_seed, AttnSection, ResourcePaths, RunConfig, RunSection, SEED_ENV,
};
pub use methods::{AttnRuleMethod, AttnTreeMethod, CrfMethod};
pub use report::{read_report, render_table, table_path, write_report, FoldResult, MethodReport, Report, RunMeta};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attn::ScoredPost;
use crate::corpus::AnnotatedPost;
use crate::error::{Error, Result};
use crate::predictions::Prediction;
use crate::span::corpus_f1;
use crate::CharIndexSet;

/// A gold post, optionally with its exported attention scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub post: AnnotatedPost,
    pub scored: Option<ScoredPost>,
}

impl Example {
    pub fn plain(post: AnnotatedPost) -> Self {
        Example { post, scored: None }
    }

    pub fn id(&self) -> &str {
        &self.post.id
    }

    pub fn gold(&self) -> &CharIndexSet {
        &self.post.gold
    }

    pub fn require_scored(&self) -> Result<&ScoredPost> {
        self.scored.as_ref().ok_or_else(|| {
            Error::Data(format!("post {} has no exported attention scores", self.post.id))
        })
    }
}

/// Pairs gold posts with exported records by id. Every post needs a record
/// with the same text.
pub fn join_scored(posts: Vec<AnnotatedPost>, scored: Vec<ScoredPost>) -> Result<Vec<Example>> {
    let mut by_id: std::collections::HashMap<String, ScoredPost> =
        scored.into_iter().map(|s| (s.id.clone(), s)).collect();
    posts
        .into_iter()
        .map(|post| {
            let s = by_id.remove(&post.id).ok_or_else(|| {
                Error::Data(format!("post {} is missing from the export", post.id))
            })?;
            if s.text != post.text {
                return Err(Error::Data(format!(
                    "post {}: exported text differs from the dataset",
                    post.id
                )));
            }
            Ok(Example {
                post,
                scored: Some(s),
            })
        })
        .collect()
}

/// A trained tagger.
pub trait Predictor: Sync {
    fn predict(&self, ex: &Example) -> Result<CharIndexSet>;
}

/// Something that can be trained on examples and then tag posts.
pub trait Method: Sync {
    fn name(&self) -> String;
    fn fit<'a>(&'a self, train: &[&Example]) -> Result<Box<dyn Predictor + 'a>>;
}

/// Predictions for every example, in input order.
pub fn predict_all(p: &dyn Predictor, examples: &[&Example]) -> Result<Vec<Prediction>> {
    examples
        .par_iter()
        .map(|ex| Ok(Prediction::new(ex.id(), p.predict(ex)?)))
        .collect()
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds; the first
/// `n % k` folds get one extra item.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Validation(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Validation(format!("{k} folds for {n} posts")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[at..at + size].to_vec());
        at += size;
    }
    Ok(folds)
}

fn in_fold(e: Error, fold: usize) -> Error {
    let tag = |m: String| format!("fold {fold}: {m}");
    match e {
        Error::Validation(m) => Error::Validation(tag(m)),
        Error::Data(m) => Error::Data(tag(m)),
        Error::Numerical(m) => Error::Numerical(tag(m)),
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column,
            message: tag(message),
        },
        other => Error::Data(tag(other.to_string())),
    }
}

fn score(p: &dyn Predictor, examples: &[&Example]) -> Result<f64> {
    let preds = predict_all(p, examples)?;
    corpus_f1(preds.iter().map(|p| &p.spans).zip(examples.iter().map(|e| e.gold())))
}

/// Trains on `k - 1` folds and scores the held-out one, for each fold.
/// Folds run one after another; methods parallelize internally.
pub fn run_crossval(method: &dyn Method, examples: &[Example], k: usize, seed: u64) -> Result<MethodReport> {
    let folds = kfold_split(examples.len(), k, seed)?;
    let mut results = Vec::with_capacity(k);
    for (f, test_idx) in folds.iter().enumerate() {
        let fold = f + 1;
        let train: Vec<&Example> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().map(|&i| &examples[i]))
            .collect();
        let test: Vec<&Example> = test_idx.iter().map(|&i| &examples[i]).collect();
        let run = || -> Result<FoldResult> {
            let fitted = method.fit(&train)?;
            Ok(FoldResult {
                fold,
                train_size: train.len(),
                test_size: test.len(),
                train_f1: score(fitted.as_ref(), &train)?,
                test_f1: score(fitted.as_ref(), &test)?,
            })
        };
        let r = run().map_err(|e| in_fold(e, fold))?;
        log::info!(
            "{} fold {fold}/{k}: train {:.3} test {:.3}",
            method.name(),
            r.train_f1,
            r.test_f1
        );
        results.push(r);
    }
    Ok(MethodReport::from_folds(method.name(), results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Constant(Option<CharIndexSet>);

    impl Predictor for Constant {
        fn predict(&self, ex: &Example) -> Result<CharIndexSet> {
            Ok(self.0.clone().unwrap_or_else(|| ex.gold().clone()))
        }
    }

    impl Method for Constant {
        fn name(&self) -> String {
            if self.0.is_some() { "empty" } else { "oracle" }.into()
        }

        fn fit<'a>(&'a self, _: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
            Ok(Box::new(Constant(self.0.clone())))
        }
    }

    struct Failing;

    impl Method for Failing {
        fn name(&self) -> String {
            "failing".into()
        }

        fn fit<'a>(&'a self, _: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
            Err(Error::Numerical("loss diverged".into()))
        }
    }

    fn examples(n: usize, empty_every: usize) -> Vec<Example> {
        (0..n)
            .map(|i| {
                let gold = if i % empty_every == 0 {
                    CharIndexSet::new()
                } else {
                    CharIndexSet::range(0, 3)
                };
                Example::plain(AnnotatedPost::new(i.to_string(), "abc def", gold))
            })
            .collect()
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n, k| -> Vec<usize> {
            kfold_split(n, k, 1).unwrap().iter().map(|f| f.len()).collect()
        };
        assert_eq!(sizes(10, 5), vec![2; 5]);
        assert_eq!(sizes(11, 5), vec![3, 2, 2, 2, 2]);
        assert!(kfold_split(4, 5, 1).is_err());
        assert!(kfold_split(4, 1, 1).is_err());
        assert_eq!(kfold_split(30, 3, 9).unwrap(), kfold_split(30, 3, 9).unwrap());
        assert_ne!(kfold_split(30, 3, 9).unwrap(), kfold_split(30, 3, 10).unwrap());
    }

    #[test]
    fn empty_predictor_scores_fraction_of_empty_gold() {
        let ex = examples(40, 4);
        let r = run_crossval(&Constant(Some(CharIndexSet::new())), &ex, 5, 3).unwrap();
        for f in &r.folds {
            let test = f.test_f1;
            assert!((0.0..=1.0).contains(&test));
        }
        // Over all posts the empty predictor scores 1 exactly on empty gold.
        let all: Vec<f64> = r.folds.iter().map(|f| f.test_f1 * f.test_size as f64).collect();
        let total: f64 = all.iter().sum::<f64>() / 40.0;
        assert!((total - 10.0 / 40.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_scores_one() {
        let r = run_crossval(&Constant(None), &examples(23, 3), 5, 0).unwrap();
        assert_eq!(r.mean_test_f1, 1.0);
        assert_eq!(r.mean_train_f1, 1.0);
    }

    #[test]
    fn failure_names_the_fold() {
        match run_crossval(&Failing, &examples(10, 2), 2, 0) {
            Err(Error::Numerical(m)) => assert!(m.starts_with("fold 1:"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn join_requires_matching_records() {
        let posts = vec![AnnotatedPost::new("a", "hi", CharIndexSet::new())];
        assert!(join_scored(posts, Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition(n in 2usize..200, k in 2usize..10, seed: u64) {
            prop_assume!(k <= n);
            let folds = kfold_split(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let max = folds.iter().map(|f| f.len()).max().unwrap();
            let min = folds.iter().map(|f| f.len()).min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
