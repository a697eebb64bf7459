//! Linear-chain CRF tagger over TOXIC / NONTOXIC / PAD.
//!
//! Emission scores come from hashed feature templates (and optionally
//! imported word embeddings) through zero to two tanh layers. Training
//! maximizes the exact conditional log-likelihood with Adam.

mod features;
mod inference;
pub mod io;
mod model;
mod objective;
mod train;

pub use features::{featurize, pad_features, FeatureConfig, FeatureVector};
pub use inference::{
    forward_backward, log_partition, log_sum_exp, path_score, viterbi, Emissions, Marginals,
    Transitions,
};
pub use model::{emission_scores, Activations, CrfParams, DenseLayer, ModelShape};
pub use objective::{neg_log_likelihood, neg_log_likelihood_and_grad, Sequence};
pub use train::{pad_batch, train, PadPolicy, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::attn::ScoredPost;
use crate::corpus::{AnnotatedPost, Resources};
use crate::error::{Error, Result};
use crate::span::{project_gold_to_tokens, token_labels_to_index_set, tokenize};
use crate::{CharIndexSet, Label, Token};

/// Label path of a chain, as labels.
pub fn viterbi_labels(em: &Emissions, tr: &Transitions) -> Vec<Label> {
    viterbi(em, tr)
        .0
        .into_iter()
        .map(|i| Label::from_index(i).expect("label index in range"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrfConfig {
    pub features: FeatureConfig,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub train: TrainConfig,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            features: FeatureConfig::default(),
            hidden_layers: 0,
            hidden_width: 32,
            train: TrainConfig::default(),
        }
    }
}

impl CrfConfig {
    pub fn shape(&self, dense_dim: usize) -> ModelShape {
        ModelShape::new(
            self.features.space(),
            dense_dim,
            self.hidden_width,
            self.hidden_layers,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.train.validate()?;
        self.shape(0).validate()
    }
}

/// Trained parameters plus the feature settings they were trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfModel {
    pub features: FeatureConfig,
    pub params: CrfParams,
}

/// A chain to train on or decode: tokens with optional per-token
/// embeddings.
#[derive(Clone, Debug)]
pub struct TaggingInput<'a> {
    pub id: &'a str,
    pub tokens: Vec<Token>,
    pub dense: Option<&'a [Vec<f64>]>,
}

impl<'a> TaggingInput<'a> {
    pub fn from_text(id: &'a str, text: &str) -> Self {
        TaggingInput {
            id,
            tokens: tokenize(text),
            dense: None,
        }
    }

    pub fn from_scored(post: &'a ScoredPost, use_embeddings: bool) -> Self {
        TaggingInput {
            id: &post.id,
            tokens: post.tokens(),
            dense: if use_embeddings {
                post.embeddings.as_deref()
            } else {
                None
            },
        }
    }
}

/// Embedding width shared by every non-empty input; 0 when none carry
/// embeddings. Posts without tokens need none.
fn dense_dim(inputs: &[TaggingInput<'_>]) -> Result<usize> {
    let mut dim = None;
    for inp in inputs.iter().filter(|i| !i.tokens.is_empty()) {
        let Some(rows) = inp.dense else { continue };
        let d = rows.first().map_or(0, |r| r.len());
        match dim {
            None => dim = Some(d),
            Some(x) if x != d => {
                return Err(Error::Validation(format!(
                    "post {}: embedding width {d}, expected {x}",
                    inp.id
                )))
            }
            _ => {}
        }
    }
    let dim = dim.unwrap_or(0);
    if dim > 0 {
        if let Some(inp) = inputs
            .iter()
            .find(|i| !i.tokens.is_empty() && i.dense.is_none())
        {
            return Err(Error::Validation(format!("post {} has no embeddings", inp.id)));
        }
    }
    Ok(dim)
}

/// Trains a CRF on gold-annotated chains.
pub fn fit_crf(
    inputs: &[TaggingInput<'_>],
    gold: &[&CharIndexSet],
    res: &Resources,
    cfg: &CrfConfig,
) -> Result<(CrfModel, TrainOutcome)> {
    cfg.validate()?;
    if inputs.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} inputs for {} gold sets",
            inputs.len(),
            gold.len()
        )));
    }
    let dim = dense_dim(inputs)?;
    let seqs = inputs
        .iter()
        .zip(gold)
        .map(|(inp, g)| {
            let dense = inp.dense.filter(|_| dim > 0);
            Ok(Sequence {
                id: inp.id.to_string(),
                features: featurize(&inp.tokens, res, &cfg.features, dense)?,
                labels: project_gold_to_tokens(g, &inp.tokens),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shape = cfg.shape(dim);
    let out = train(&seqs, shape, &cfg.train, &pad_features(&cfg.features, dim))?;
    let model = CrfModel {
        features: cfg.features,
        params: out.params.clone(),
    };
    Ok((model, out))
}

/// Trains on plain posts with template features only.
pub fn fit_crf_posts(
    posts: &[AnnotatedPost],
    res: &Resources,
    cfg: &CrfConfig,
) -> Result<(CrfModel, TrainOutcome)> {
    let inputs: Vec<TaggingInput<'_>> = posts
        .iter()
        .map(|p| TaggingInput::from_text(&p.id, &p.text))
        .collect();
    let gold: Vec<&CharIndexSet> = posts.iter().map(|p| &p.gold).collect();
    fit_crf(&inputs, &gold, res, cfg)
}

impl CrfModel {
    pub fn uses_embeddings(&self) -> bool {
        self.params.shape.n_dense > 0
    }

    /// Decoded labels of real tokens; PAD decodes become NONTOXIC.
    pub fn predict_labels(&self, input: &TaggingInput<'_>, res: &Resources) -> Result<Vec<Label>> {
        if self.uses_embeddings() && input.dense.is_none() && !input.tokens.is_empty() {
            return Err(Error::Validation(format!(
                "model expects embeddings but post {} has none",
                input.id
            )));
        }
        let dense = input.dense.filter(|_| self.uses_embeddings());
        let feats = featurize(&input.tokens, res, &self.features, dense)?;
        let em = emission_scores(&self.params, &feats)?;
        Ok(viterbi_labels(&em, &self.params.transitions)
            .into_iter()
            .map(Label::unpadded)
            .collect())
    }

    pub fn predict(&self, input: &TaggingInput<'_>, res: &Resources) -> Result<CharIndexSet> {
        let labels = self.predict_labels(input, res)?;
        Ok(token_labels_to_index_set(&input.tokens, &labels))
    }

    pub fn predict_post(&self, id: &str, text: &str, res: &Resources) -> Result<CharIndexSet> {
        self.predict(&TaggingInput::from_text(id, text), res)
    }
}
