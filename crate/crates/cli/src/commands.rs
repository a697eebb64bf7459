use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use toxspans::attn::{
    grid_search, load_scored, predict_rule, train_decision_tree, word_samples, word_schema,
    DecisionTree, Rule, RuleConfig, ScoredPost,
};
use toxspans::baselines::{Baseline, BaselineMethod};
use toxspans::corpus::{load_toxic_spans, normalize, AnnotatedPost, Resources};
use toxspans::crf::io::{load_model, save_model, Manifest, MODEL_VERSION};
use toxspans::crf::{fit_crf, CrfConfig, PadPolicy, TaggingInput, TrainConfig};
use toxspans::ensemble::{combine_predictions, EnsembleMode};
use toxspans::harness::{
    config_hash, join_scored, read_report, render_table, resolve_seed, run_crossval,
    write_report, AttnRuleMethod, AttnTreeMethod, CrfMethod, Example, Method, Report, RunConfig,
    RunMeta,
};
use toxspans::predictions::{load_predictions, save_predictions, write_predictions, Prediction};
use toxspans::span::{corpus_f1, tokenize};
use toxspans::{CharIndexSet, Error, Result};

use crate::{BaselineArg, Cli, Command, CrfArgs, ModeArg, PadArg, ResourceArgs, RuleArg, RuleArgs};

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    limit: Option<usize>,
}

impl Ctx<'_> {
    fn seed(&self) -> Result<u64> {
        resolve_seed(self.cli.seed, self.cfg.run.seed)
    }

    fn resources(&self, args: &ResourceArgs) -> Result<Resources> {
        let mut paths = self.cfg.resources.clone();
        if args.hate_words.is_some() {
            paths.hate_words = args.hate_words.clone();
        }
        if args.sentiment.is_some() {
            paths.sentiment = args.sentiment.clone();
        }
        if args.stopwords.is_some() {
            paths.stopwords = args.stopwords.clone();
        }
        paths.load()
    }

    fn posts(&self, path: &Path) -> Result<Vec<AnnotatedPost>> {
        let (posts, stats) = load_toxic_spans(path, self.limit)?;
        log::info!("{}: {} posts", path.display(), stats.rows);
        if posts.is_empty() {
            return Err(Error::Data(format!("{}: no usable rows", path.display())));
        }
        Ok(posts)
    }

    fn scored(&self, path: &Path, res: &Resources) -> Result<Vec<ScoredPost>> {
        let (header, posts) = load_scored(path, res, None)?;
        log::info!(
            "{}: {} records, checkpoint {}, {} truncated",
            path.display(),
            posts.len(),
            header.checkpoint_digest,
            header.truncated
        );
        Ok(posts)
    }

    /// Gold posts joined with their exported records.
    fn examples(&self, input: &Path, export: &Path, res: &Resources) -> Result<Vec<Example>> {
        join_scored(self.posts(input)?, self.scored(export, res)?)
    }

    fn rule(&self, args: &RuleArgs) -> RuleConfig {
        let mut r = self.cfg.attn.rule.clone();
        if let Some(rule) = args.rule {
            r.rule = match rule {
                RuleArg::R1 => Rule::R1,
                RuleArg::R2 => Rule::R2,
                RuleArg::R3 => Rule::R3,
            };
        }
        if let Some(g) = args.gate {
            r.gate = g;
        }
        r.gate_oracle |= args.gate_oracle;
        r
    }

    fn crf_config(&self, args: &CrfArgs) -> Result<CrfConfig> {
        let mut c = self.cfg.crf.clone();
        if args.embedding_preset {
            c.train = TrainConfig {
                pad: c.train.pad,
                ..TrainConfig::embedding_preset()
            };
        }
        let t = &mut c.train;
        t.seed = self.seed()?;
        if let Some(x) = args.epochs {
            t.epochs = x;
        }
        if let Some(x) = args.lr {
            t.lr = x;
        }
        if let Some(x) = args.l2 {
            t.l2 = x;
        }
        if let Some(x) = args.batch_size {
            t.batch_size = x;
        }
        if let Some(x) = args.clip {
            t.clip = x;
        }
        if let Some(p) = args.pad {
            t.pad = match p {
                PadArg::Pad => PadPolicy::Pad,
                PadArg::Mask => PadPolicy::Mask,
            };
        }
        if let Some(x) = args.hidden_layers {
            c.hidden_layers = x;
        }
        if let Some(x) = args.hidden_width {
            c.hidden_width = x;
        }
        if let Some(x) = args.hash_bits {
            c.features.hash_bits = x;
        }
        if let Some(x) = args.window {
            c.features.window = x;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(out: Option<&Path>, preds: &[Prediction]) -> Result<()> {
    match out {
        Some(p) => save_predictions(p, preds),
        None => write_predictions(std::io::stdout().lock(), preds)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn report_f1(preds: &[Prediction], gold: &[&CharIndexSet]) -> Result<f64> {
    let f1 = corpus_f1(preds.iter().map(|p| &p.spans).zip(gold.iter().copied()))?;
    eprintln!("corpus F1 {f1:.4} over {} posts", preds.len());
    Ok(f1)
}

fn baseline_method(m: BaselineArg) -> BaselineMethod {
    match m {
        BaselineArg::Random => BaselineMethod::Random,
        BaselineArg::Hate => BaselineMethod::Hate,
        BaselineArg::Sentiment => BaselineMethod::Sentiment,
        BaselineArg::Combined => BaselineMethod::Combined,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let limit = cli.limit.or(cfg.run.limit);
    let ctx = Ctx { cli, cfg, limit };
    match &cli.command {
        Command::Tokenize { text, normalize: norm } => tokenize_cmd(text.as_deref(), *norm),
        Command::Eval { gold, pred } => eval_cmd(&ctx, gold, pred),
        Command::TagBaseline {
            input,
            method,
            p_toxic,
            out,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let method = baseline_method(*method);
            let mut tagger = ctx.cfg.baseline.clone();
            if let Some(p) = p_toxic {
                tagger.p_toxic = *p;
            }
            if method == BaselineMethod::Random {
                tagger.seed = ctx.seed()?;
            }
            let b = Baseline::new(method, tagger, res.hate, res.sentiment)?;
            let posts = ctx.posts(input)?;
            let preds: Vec<Prediction> = posts
                .iter()
                .map(|p| Prediction::new(&p.id, b.predict(&p.id, &p.text)))
                .collect();
            emit(out.as_deref(), &preds)?;
            report_f1(&preds, &posts.iter().map(|p| &p.gold).collect::<Vec<_>>())?;
            Ok(())
        }
        Command::SelectAttn {
            input,
            export,
            percentile,
            threshold,
            rule,
            out,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let mut rc = ctx.rule(rule);
            if let Some(p) = percentile {
                rc.percentile = *p;
            }
            if let Some(t) = threshold {
                rc.threshold = *t;
            }
            rc.validate()?;
            let ex = ctx.examples(input, export, &res)?;
            let preds = ex
                .iter()
                .map(|e| {
                    let s = e.require_scored()?;
                    Ok(Prediction::new(e.id(), predict_rule(s, &rc, &res.stopwords, Some(e.gold()))))
                })
                .collect::<Result<Vec<_>>>()?;
            emit(out.as_deref(), &preds)?;
            report_f1(&preds, &ex.iter().map(|e| e.gold()).collect::<Vec<_>>())?;
            Ok(())
        }
        Command::GridsearchAttn {
            input,
            export,
            thresholds,
            percentiles,
            rule,
            out,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let base = ctx.rule(rule);
            base.validate()?;
            let ex = ctx.examples(input, export, &res)?;
            let dev: Vec<(ScoredPost, CharIndexSet)> = ex
                .into_iter()
                .map(|e| (e.scored.expect("joined"), e.post.gold))
                .collect();
            let th = thresholds.clone().unwrap_or_else(|| ctx.cfg.attn.thresholds.clone());
            let pc = percentiles.clone().unwrap_or_else(|| ctx.cfg.attn.percentiles.clone());
            let grid = grid_search(&dev, &th, &pc, &base, &res.stopwords)?;
            let mut stdout = std::io::stdout().lock();
            let w = |e| Error::io("<stdout>", e);
            writeln!(stdout, "percentile\tthreshold\tf1").map_err(w)?;
            for c in &grid.cells {
                writeln!(stdout, "{}\t{}\t{:.4}", c.percentile, c.threshold, c.f1).map_err(w)?;
            }
            writeln!(
                stdout,
                "best\tpercentile {}\tthreshold {}\tf1 {:.4}",
                grid.best.percentile, grid.best.threshold, grid.best.f1
            )
            .map_err(w)?;
            if let Some(p) = out {
                let json = serde_json_string(&grid)?;
                std::fs::write(p, json).map_err(|e| Error::io(p, e))?;
            }
            Ok(())
        }
        Command::TrainTree {
            input,
            export,
            model,
            max_depth,
            min_leaf,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let mut tc = ctx.cfg.tree;
            if let Some(d) = max_depth {
                tc.max_depth = *d;
            }
            if let Some(m) = min_leaf {
                tc.min_leaf = *m;
            }
            let ex = ctx.examples(input, export, &res)?;
            let pairs: Vec<(ScoredPost, CharIndexSet)> = ex
                .into_iter()
                .map(|e| (e.scored.expect("joined"), e.post.gold))
                .collect();
            let tree = train_decision_tree(word_schema(), &word_samples(&pairs), tc)?;
            tree.save(model)?;
            eprintln!("tree depth {} with {} leaves", tree.depth(), tree.n_leaves());
            Ok(())
        }
        Command::PredictTree {
            model,
            export,
            gate,
            out,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let tree = DecisionTree::load(model)?;
            let gate = gate.unwrap_or(ctx.cfg.attn.rule.gate);
            let (_, posts) = load_scored(export, &res, ctx.limit)?;
            let preds = posts
                .iter()
                .map(|p| Ok(Prediction::new(&p.id, tree.predict_post(p, gate)?)))
                .collect::<Result<Vec<_>>>()?;
            emit(out.as_deref(), &preds)
        }
        Command::TrainCrf {
            input,
            model,
            crf,
            resources,
        } => train_crf_cmd(&ctx, input, model, crf, resources),
        Command::PredictCrf {
            model,
            input,
            export,
            out,
            resources,
        } => {
            let res = ctx.resources(resources)?;
            let m = load_model(model)?;
            let posts = ctx.posts(input)?;
            let preds = if m.uses_embeddings() {
                let export = export.as_ref().ok_or_else(|| {
                    Error::Validation("this model needs --export with embeddings".into())
                })?;
                let ex = join_scored(posts.clone(), ctx.scored(export, &res)?)?;
                ex.iter()
                    .map(|e| {
                        let inp = TaggingInput::from_scored(e.require_scored()?, true);
                        Ok(Prediction::new(e.id(), m.predict(&inp, &res)?))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                posts
                    .iter()
                    .map(|p| Ok(Prediction::new(&p.id, m.predict_post(&p.id, &p.text, &res)?)))
                    .collect::<Result<Vec<_>>>()?
            };
            emit(out.as_deref(), &preds)?;
            report_f1(&preds, &posts.iter().map(|p| &p.gold).collect::<Vec<_>>())?;
            Ok(())
        }
        Command::CrossvalCrf {
            input,
            folds,
            report,
            also,
            no_crf,
            crf,
            resources,
        } => crossval_cmd(&ctx, input, *folds, report, also, *no_crf, crf, resources),
        Command::Ensemble { mode, out, inputs } => {
            let mode = match mode {
                ModeArg::Vote => EnsembleMode::Vote,
                ModeArg::Intersect => EnsembleMode::Intersect,
            };
            let models = inputs
                .iter()
                .map(load_predictions)
                .collect::<Result<Vec<_>>>()?;
            let combined = combine_predictions(mode, &models)?;
            emit(out.as_deref(), &combined)
        }
        Command::Report { path } => {
            let r = read_report(path)?;
            print!("{}", render_table(&r));
            Ok(())
        }
    }
}

fn serde_json_string(grid: &toxspans::attn::GridResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(grid)? + "\n")
}

fn tokenize_cmd(text: Option<&str>, norm: bool) -> Result<()> {
    let text = match text {
        Some(t) => t.to_string(),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::io("<stdin>", e))?;
            s
        }
    };
    let mut out = std::io::stdout().lock();
    let w = |e| Error::io("<stdout>", e);
    if norm {
        writeln!(out, "# {}", normalize(&text).0).map_err(w)?;
    }
    for t in tokenize(&text) {
        writeln!(out, "{}\t{}\t{}\t{}", t.start, t.end, t.surface, t.norm).map_err(w)?;
    }
    Ok(())
}

fn eval_cmd(ctx: &Ctx<'_>, gold: &Path, pred: &Path) -> Result<()> {
    let posts = ctx.posts(gold)?;
    let preds = load_predictions(pred)?;
    let by_id: HashMap<&str, &CharIndexSet> =
        preds.iter().map(|p| (p.id.as_str(), &p.spans)).collect();
    let missing: Vec<&str> = posts
        .iter()
        .map(|p| p.id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).copied().collect();
        return Err(Error::Data(format!(
            "{} gold posts have no prediction, e.g. {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    if preds.len() > posts.len() {
        log::warn!("{} predictions have no gold post", preds.len() - posts.len());
    }
    let f1 = corpus_f1(posts.iter().map(|p| (by_id[p.id.as_str()], &p.gold)))?;
    println!("posts\t{}", posts.len());
    println!("f1\t{f1:.4}");
    Ok(())
}

/// The export to read embeddings from, when `--emb` is set.
fn embedding_export(args: &CrfArgs) -> Result<Option<&Path>> {
    match (&args.export, args.emb) {
        (Some(p), true) => Ok(Some(p)),
        (None, true) => Err(Error::Validation("--emb needs --export".into())),
        (_, false) => Ok(None),
    }
}

fn train_crf_cmd(
    ctx: &Ctx<'_>,
    input: &Path,
    model: &Path,
    args: &CrfArgs,
    resources: &ResourceArgs,
) -> Result<()> {
    let res = ctx.resources(resources)?;
    let cfg = ctx.crf_config(args)?;
    let posts = ctx.posts(input)?;
    let rows = posts.len();
    let (m, out) = match embedding_export(args)? {
        Some(export) => {
            let ex = join_scored(posts, ctx.scored(export, &res)?)?;
            let inputs: Vec<TaggingInput<'_>> = ex
                .iter()
                .map(|e| Ok(TaggingInput::from_scored(e.require_scored()?, true)))
                .collect::<Result<_>>()?;
            let gold: Vec<&CharIndexSet> = ex.iter().map(|e| e.gold()).collect();
            fit_crf(&inputs, &gold, &res, &cfg)?
        }
        None => {
            let inputs: Vec<TaggingInput<'_>> = posts
                .iter()
                .map(|p| TaggingInput::from_text(&p.id, &p.text))
                .collect();
            let gold: Vec<&CharIndexSet> = posts.iter().map(|p| &p.gold).collect();
            fit_crf(&inputs, &gold, &res, &cfg)?
        }
    };
    let manifest = Manifest {
        format_version: MODEL_VERSION,
        seed: cfg.train.seed,
        features: cfg.features,
        shape: m.params.shape,
        train: cfg.train.clone(),
        training_rows: rows,
        loss_trace: out.loss_trace.clone(),
    };
    save_model(model, &m, Some(&manifest))?;
    if let Some(last) = out.loss_trace.last() {
        eprintln!("trained {} steps, final epoch loss {last:.5}", out.steps);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn crossval_cmd(
    ctx: &Ctx<'_>,
    input: &Path,
    folds: Option<usize>,
    report: &Path,
    also: &[String],
    no_crf: bool,
    crf: &CrfArgs,
    resources: &ResourceArgs,
) -> Result<()> {
    let res = ctx.resources(resources)?;
    let seed = ctx.seed()?;
    let k = folds.unwrap_or(ctx.cfg.run.folds);
    let crf_cfg = ctx.crf_config(crf)?;
    let mut methods: Vec<Box<dyn Method>> = Vec::new();
    let needs_export = also.iter().any(|m| m.starts_with("attn-")) || crf.emb;
    if !no_crf {
        methods.push(Box::new(CrfMethod {
            config: crf_cfg.clone(),
            resources: res.clone(),
            use_embeddings: embedding_export(crf)?.is_some(),
        }));
    }
    for name in also {
        let m: Box<dyn Method> = match name.as_str() {
            "attn-r1" | "attn-r2" | "attn-r3" => {
                let mut base = ctx.cfg.attn.rule.clone();
                base.rule = name[5..].parse()?;
                Box::new(AttnRuleMethod {
                    base,
                    thresholds: ctx.cfg.attn.thresholds.clone(),
                    percentiles: ctx.cfg.attn.percentiles.clone(),
                    stopwords: res.stopwords.clone(),
                })
            }
            "attn-tree" => Box::new(AttnTreeMethod {
                config: ctx.cfg.tree,
                gate: ctx.cfg.attn.rule.gate,
            }),
            other => {
                let method: BaselineMethod = other
                    .strip_prefix("baseline-")
                    .ok_or_else(|| Error::Validation(format!("unknown method `{other}`")))?
                    .parse()?;
                let mut tc = ctx.cfg.baseline.clone();
                tc.seed = seed;
                Box::new(Baseline::new(method, tc, res.hate.clone(), res.sentiment.clone())?)
            }
        };
        methods.push(m);
    }
    if methods.is_empty() {
        return Err(Error::Validation("no methods to evaluate".into()));
    }
    let posts = ctx.posts(input)?;
    let export = crf.export.as_deref();
    let examples = match export {
        Some(e) => join_scored(posts, ctx.scored(e, &res)?)?,
        None if needs_export => {
            return Err(Error::Validation(
                "attention methods need --export".into(),
            ))
        }
        None => posts.into_iter().map(Example::plain).collect(),
    };
    let mut resolved = ctx.cfg.clone();
    resolved.run.seed = Some(seed);
    resolved.run.folds = k;
    resolved.run.limit = ctx.limit;
    resolved.crf = crf_cfg;
    let mut out = Report {
        meta: RunMeta {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            folds: k,
            config_hash: config_hash(&resolved),
            dataset: input.display().to_string(),
            rows: examples.len(),
        },
        methods: Vec::new(),
    };
    for m in &methods {
        out.methods.push(run_crossval(m.as_ref(), &examples, k, seed)?);
    }
    let table = write_report(&out, report)?;
    print!("{}", render_table(&out));
    log::info!("report written to {} and {}", report.display(), table.display());
    Ok(())
}
