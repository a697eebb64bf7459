use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::model::{CrfParams, ModelShape};
use super::objective::{neg_log_likelihood_and_grad, Sequence};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::span::Label;

/// What happens to the positions added when a batch is padded to its
/// longest sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadPolicy {
    /// Padded positions carry the PAD feature and gold label PAD and count
    /// towards the likelihood.
    #[default]
    Pad,
    /// No padding; each chain keeps its own length.
    Mask,
}

impl std::str::FromStr for PadPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pad" => Ok(PadPolicy::Pad),
            "mask" => Ok(PadPolicy::Mask),
            _ => Err(Error::Validation(format!("unknown pad policy {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub pad: PadPolicy,
    /// Stop after this many optimizer steps.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            lr: 1e-2,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
            clip: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            pad: PadPolicy::Pad,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    /// Schedule for runs on imported encoder embeddings: 2 epochs at 3e-5.
    pub fn embedding_preset() -> Self {
        TrainConfig {
            epochs: 2,
            lr: 3e-5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.clip >= 0.0) {
            return bad(format!("clip must be non-negative, got {}", self.clip));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            return bad("Adam epsilon must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: CrfParams,
    /// Mean per-sequence objective of each completed epoch.
    pub loss_trace: Vec<f64>,
    pub steps: usize,
}

struct Adam {
    m: CrfParams,
    v: CrfParams,
    t: i32,
}

impl Adam {
    fn new(shape: ModelShape) -> Self {
        Adam {
            m: CrfParams::zeros(shape),
            v: CrfParams::zeros(shape),
            t: 0,
        }
    }

    /// One descent step on `params` along `grad`.
    fn step(&mut self, params: &mut CrfParams, grad: &CrfParams, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let arrays = params
            .arrays_mut()
            .into_iter()
            .zip(grad.arrays())
            .zip(self.m.arrays_mut().into_iter().zip(self.v.arrays_mut()));
        for ((p, g), (m, v)) in arrays {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = b1 * m[k] + (1.0 - b1) * gk;
                v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= cfg.lr * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Extends every chain in `batch` to the longest one with PAD positions.
pub fn pad_batch(batch: &[&Sequence], pad: &FeatureVector) -> Vec<Sequence> {
    let width = batch.iter().map(|s| s.len()).max().unwrap_or(0);
    batch
        .iter()
        .map(|s| {
            let mut s = (*s).clone();
            s.features.resize(width, pad.clone());
            s.labels.resize(width, Label::Pad);
            s
        })
        .collect()
}

fn global_norm(g: &CrfParams) -> f64 {
    g.sq_norm().sqrt()
}

/// Mini-batch Adam on the mean negative log-likelihood, starting from the
/// seeded initialization. Batch order comes from a seeded shuffle each
/// epoch, so equal inputs and seeds give bit-identical results.
pub fn train(
    seqs: &[Sequence],
    shape: ModelShape,
    cfg: &TrainConfig,
    pad: &FeatureVector,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    shape.validate()?;
    if seqs.is_empty() {
        return Err(Error::Data("no training sequences".into()));
    }
    let mut params = CrfParams::init(shape, derive_seed(cfg.seed, "crf-init"));
    let mut adam = Adam::new(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "crf-shuffle"));
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut steps = 0usize;
    let limit = cfg.max_steps.unwrap_or(usize::MAX);
    'epochs: for epoch in 0..cfg.epochs {
        if steps >= limit {
            break;
        }
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if steps >= limit {
                break 'epochs;
            }
            let refs: Vec<&Sequence> = chunk.iter().map(|&i| &seqs[i]).collect();
            let owned;
            let batch: &[Sequence] = match cfg.pad {
                PadPolicy::Pad => {
                    owned = pad_batch(&refs, pad);
                    &owned
                }
                PadPolicy::Mask => {
                    owned = refs.into_iter().cloned().collect();
                    &owned
                }
            };
            let b = batch.len() as f64;
            let (loss, mut grad) = match neg_log_likelihood_and_grad(&params, batch, cfg.l2 * b) {
                Ok(x) => x,
                Err(Error::Numerical(m)) => {
                    return Err(Error::Numerical(format!(
                        "training diverged in epoch {} after {steps} steps ({m}); loss trace {trace:?}",
                        epoch + 1
                    )))
                }
                Err(e) => return Err(e),
            };
            grad.scale(1.0 / b);
            if cfg.clip > 0.0 {
                let norm = global_norm(&grad);
                if norm > cfg.clip {
                    grad.scale(cfg.clip / norm);
                }
            }
            adam.step(&mut params, &grad, cfg);
            if !params.is_finite() {
                return Err(Error::Numerical(format!(
                    "parameters became non-finite in epoch {}; loss trace {trace:?}",
                    epoch + 1
                )));
            }
            steps += 1;
            total += loss;
            seen += chunk.len();
        }
        let mean = total / seen as f64;
        log::info!("crf epoch {}: loss {mean:.5}", epoch + 1);
        trace.push(mean);
    }
    Ok(TrainOutcome {
        params,
        loss_trace: trace,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::inference::viterbi;
    use crate::crf::model::emission_scores;

    /// Token k carries sparse feature k % 4; labels are TOXIC for feature 0.
    fn toy(n_seq: usize) -> Vec<Sequence> {
        (0..n_seq)
            .map(|s| {
                let len = 2 + s % 5;
                let feats: Vec<u32> = (0..len).map(|k| ((s + 3 * k) % 4) as u32).collect();
                Sequence {
                    id: s.to_string(),
                    labels: feats
                        .iter()
                        .map(|&f| if f == 0 { Label::Toxic } else { Label::NonToxic })
                        .collect(),
                    features: feats
                        .into_iter()
                        .map(|f| FeatureVector {
                            sparse: vec![f],
                            dense: vec![],
                        })
                        .collect(),
                }
            })
            .collect()
    }

    fn pad() -> FeatureVector {
        FeatureVector {
            sparse: vec![4],
            dense: vec![],
        }
    }

    #[test]
    fn zero_steps_keeps_initialization() {
        let shape = ModelShape::new(5, 0, 0, 0);
        let cfg = TrainConfig {
            max_steps: Some(0),
            seed: 7,
            ..TrainConfig::default()
        };
        let out = train(&toy(10), shape, &cfg, &pad()).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.params, CrfParams::init(shape, derive_seed(7, "crf-init")));
    }

    #[test]
    fn same_seed_same_trace() {
        let shape = ModelShape::new(5, 0, 3, 1);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 1,
            ..TrainConfig::default()
        };
        let a = train(&toy(30), shape, &cfg, &pad()).unwrap();
        let b = train(&toy(30), shape, &cfg, &pad()).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn learns_toy_rule() {
        let shape = ModelShape::new(5, 0, 0, 0);
        let cfg = TrainConfig {
            epochs: 30,
            lr: 0.1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let data = toy(60);
        let out = train(&data, shape, &cfg, &pad()).unwrap();
        for s in &data {
            let em = emission_scores(&out.params, &s.features).unwrap();
            let path = viterbi(&em, &out.params.transitions).0;
            let gold: Vec<usize> = s.labels.iter().map(|l| l.index()).collect();
            assert_eq!(path, gold);
        }
    }

    #[test]
    fn full_batch_loss_does_not_increase() {
        let shape = ModelShape::new(5, 0, 0, 0);
        let data = toy(20);
        let cfg = TrainConfig {
            epochs: 25,
            lr: 1e-3,
            batch_size: data.len(),
            ..TrainConfig::default()
        };
        let out = train(&data, shape, &cfg, &pad()).unwrap();
        for w in out.loss_trace.windows(2) {
            assert!(w[1] <= w[0], "{:?}", out.loss_trace);
        }
    }

    #[test]
    fn pad_batch_extends_with_pad() {
        let data = toy(3);
        let refs: Vec<&Sequence> = data.iter().collect();
        let padded = pad_batch(&refs, &pad());
        assert!(padded.iter().all(|s| s.len() == 4));
        assert_eq!(padded[0].labels[2..], [Label::Pad, Label::Pad]);
        assert_eq!(padded[0].features[3], pad());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { l2: -1.0, ..Default::default() }.validate().is_err());
        let p = TrainConfig::embedding_preset();
        assert_eq!((p.epochs, p.lr), (2, 3e-5));
    }
}
