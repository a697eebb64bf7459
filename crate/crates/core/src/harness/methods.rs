use super::{Example, Method, Predictor};
use crate::attn::{
    grid_search, predict_rule, train_decision_tree, word_samples, word_schema, DecisionTree,
    RuleConfig, ScoredPost, TreeConfig,
};
use crate::baselines::Baseline;
use crate::corpus::{Resources, StopWords};
use crate::crf::{fit_crf, CrfConfig, CrfModel, TaggingInput};
use crate::error::Result;
use crate::CharIndexSet;

impl Predictor for Baseline {
    fn predict(&self, ex: &Example) -> Result<CharIndexSet> {
        Ok(Baseline::predict(self, &ex.post.id, &ex.post.text))
    }
}

impl Method for Baseline {
    fn name(&self) -> String {
        format!("baseline-{}", self.method.name())
    }

    fn fit<'a>(&'a self, _: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
        Ok(Box::new(self.clone()))
    }
}

/// CRF trained per fold. With `use_embeddings`, every example needs an
/// exported record carrying embeddings.
pub struct CrfMethod {
    pub config: CrfConfig,
    pub resources: Resources,
    pub use_embeddings: bool,
}

struct CrfPredictor<'a> {
    model: CrfModel,
    method: &'a CrfMethod,
}

impl CrfMethod {
    fn input<'e>(&self, ex: &'e Example) -> Result<TaggingInput<'e>> {
        if self.use_embeddings {
            Ok(TaggingInput::from_scored(ex.require_scored()?, true))
        } else {
            Ok(TaggingInput::from_text(&ex.post.id, &ex.post.text))
        }
    }
}

impl Predictor for CrfPredictor<'_> {
    fn predict(&self, ex: &Example) -> Result<CharIndexSet> {
        let input = self.method.input(ex)?;
        self.model.predict(&input, &self.method.resources)
    }
}

impl Method for CrfMethod {
    fn name(&self) -> String {
        if self.use_embeddings { "crf-emb" } else { "crf" }.into()
    }

    fn fit<'a>(&'a self, train: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
        let inputs = train
            .iter()
            .map(|ex| self.input(ex))
            .collect::<Result<Vec<_>>>()?;
        let gold: Vec<&CharIndexSet> = train.iter().map(|ex| ex.gold()).collect();
        let (model, _) = fit_crf(&inputs, &gold, &self.resources, &self.config)?;
        Ok(Box::new(CrfPredictor {
            model,
            method: self,
        }))
    }
}

fn scored_pairs(train: &[&Example]) -> Result<Vec<(ScoredPost, CharIndexSet)>> {
    train
        .iter()
        .map(|ex| Ok((ex.require_scored()?.clone(), ex.gold().clone())))
        .collect()
}

/// Attention rule whose percentile and threshold are grid-searched on the
/// training folds.
pub struct AttnRuleMethod {
    pub base: RuleConfig,
    pub thresholds: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub stopwords: StopWords,
}

struct RulePredictor<'a> {
    cfg: RuleConfig,
    stopwords: &'a StopWords,
}

impl Predictor for RulePredictor<'_> {
    fn predict(&self, ex: &Example) -> Result<CharIndexSet> {
        Ok(predict_rule(
            ex.require_scored()?,
            &self.cfg,
            self.stopwords,
            Some(ex.gold()),
        ))
    }
}

impl Method for AttnRuleMethod {
    fn name(&self) -> String {
        format!("attn-{:?}", self.base.rule).to_lowercase()
    }

    fn fit<'a>(&'a self, train: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
        let dev = scored_pairs(train)?;
        let grid = grid_search(
            &dev,
            &self.thresholds,
            &self.percentiles,
            &self.base,
            &self.stopwords,
        )?;
        log::debug!(
            "grid search chose percentile {} threshold {}",
            grid.best.percentile,
            grid.best.threshold
        );
        Ok(Box::new(RulePredictor {
            cfg: RuleConfig {
                percentile: grid.best.percentile,
                threshold: grid.best.threshold,
                ..self.base.clone()
            },
            stopwords: &self.stopwords,
        }))
    }
}

/// Decision tree over word attention, part of speech, polarity and
/// lexicon membership.
pub struct AttnTreeMethod {
    pub config: TreeConfig,
    pub gate: f64,
}

struct TreePredictor {
    tree: DecisionTree,
    gate: f64,
}

impl Predictor for TreePredictor {
    fn predict(&self, ex: &Example) -> Result<CharIndexSet> {
        self.tree.predict_post(ex.require_scored()?, self.gate)
    }
}

impl Method for AttnTreeMethod {
    fn name(&self) -> String {
        "attn-tree".into()
    }

    fn fit<'a>(&'a self, train: &[&Example]) -> Result<Box<dyn Predictor + 'a>> {
        let samples = word_samples(&scored_pairs(train)?);
        let tree = train_decision_tree(word_schema(), &samples, self.config)?;
        Ok(Box::new(TreePredictor {
            tree,
            gate: self.gate,
        }))
    }
}
