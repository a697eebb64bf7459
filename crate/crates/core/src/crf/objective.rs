use rayon::prelude::*;

use super::features::FeatureVector;
use super::inference::{forward_backward, path_score, Transitions};
use super::model::CrfParams;
use crate::error::{Error, Result};
use crate::span::Label;

/// One training chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub id: String,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<Label>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-sequence quantities computed independently of the rest of the batch.
struct SeqGrad {
    nll: f64,
    acts: super::model::Activations,
    /// `n x L`: marginal minus one-hot gold.
    d_emissions: Vec<f64>,
    d_trans: Transitions,
}

fn sequence_grad(params: &CrfParams, seq: &Sequence) -> Result<SeqGrad> {
    if seq.features.len() != seq.labels.len() {
        return Err(Error::Validation(format!(
            "sequence {}: {} feature vectors for {} labels",
            seq.id,
            seq.features.len(),
            seq.labels.len()
        )));
    }
    let acts = params.forward(&seq.features)?;
    let em = &acts.emissions;
    let tr = &params.transitions;
    let l = tr.n_labels;
    let n = seq.len();
    let gold: Vec<usize> = seq.labels.iter().map(|x| x.index()).collect();
    let m = forward_backward(em, tr);
    let nll = m.log_z - path_score(em, tr, &gold);
    if !nll.is_finite() || !m.unary.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite likelihood in sequence {}",
            seq.id
        )));
    }
    let mut d_emissions = m.unary.clone();
    let mut d_trans = Transitions::zeros(l);
    if n > 0 {
        for (t, &g) in gold.iter().enumerate() {
            d_emissions[t * l + g] -= 1.0;
        }
        for j in 0..l {
            d_trans.start[j] = m.unary[j];
            d_trans.stop[j] = m.unary[(n - 1) * l + j];
        }
        d_trans.start[gold[0]] -= 1.0;
        d_trans.stop[gold[n - 1]] -= 1.0;
        for t in 0..n - 1 {
            for k in 0..l * l {
                d_trans.matrix[k] += m.pairwise[t * l * l + k];
            }
            d_trans.matrix[gold[t] * l + gold[t + 1]] -= 1.0;
        }
    }
    Ok(SeqGrad {
        nll,
        acts,
        d_emissions,
        d_trans,
    })
}

/// Summed negative log-likelihood of `batch` plus `l2 * |params|^2`, and
/// its gradient.
///
/// Sequences are processed in parallel; their contributions are added in
/// batch order so the result does not depend on scheduling.
pub fn neg_log_likelihood_and_grad(
    params: &CrfParams,
    batch: &[Sequence],
    l2: f64,
) -> Result<(f64, CrfParams)> {
    let per_seq: Vec<SeqGrad> = batch
        .par_iter()
        .map(|s| sequence_grad(params, s))
        .collect::<Result<_>>()?;
    let mut grad = CrfParams::zeros(params.shape);
    let mut loss = 0.0;
    for (seq, sg) in batch.iter().zip(&per_seq) {
        loss += sg.nll;
        params.backprop_emissions(&seq.features, &sg.acts, &sg.d_emissions, &mut grad);
        let g = &mut grad.transitions;
        for (a, b) in g.matrix.iter_mut().zip(&sg.d_trans.matrix) {
            *a += b;
        }
        for (a, b) in g.start.iter_mut().zip(&sg.d_trans.start) {
            *a += b;
        }
        for (a, b) in g.stop.iter_mut().zip(&sg.d_trans.stop) {
            *a += b;
        }
    }
    if l2 != 0.0 {
        loss += l2 * params.sq_norm();
        grad.add_scaled(params, 2.0 * l2);
    }
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite batch loss".into()));
    }
    Ok((loss, grad))
}

/// Loss alone, without the gradient.
pub fn neg_log_likelihood(params: &CrfParams, batch: &[Sequence], l2: f64) -> Result<f64> {
    let nll: Vec<f64> = batch
        .par_iter()
        .map(|s| -> Result<f64> {
            let em = params.forward(&s.features)?.emissions;
            let gold: Vec<usize> = s.labels.iter().map(|x| x.index()).collect();
            let z = super::inference::log_partition(&em, &params.transitions);
            let v = z - path_score(&em, &params.transitions, &gold);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numerical(format!("non-finite likelihood in sequence {}", s.id)))
            }
        })
        .collect::<Result<_>>()?;
    Ok(nll.iter().sum::<f64>() + l2 * params.sq_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::model::ModelShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, layers: usize) -> (CrfParams, Vec<Sequence>) {
        let shape = ModelShape::new(3, 2, 4, layers);
        let mut p = CrfParams::zeros(shape);
        for a in p.arrays_mut() {
            a.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
        let seqs = (0..2)
            .map(|k| Sequence {
                id: format!("s{k}"),
                features: (0..4)
                    .map(|_| FeatureVector {
                        sparse: vec![rng.gen_range(0..3)],
                        dense: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    })
                    .collect(),
                labels: (0..4).map(|_| Label::ALL[rng.gen_range(0..3)]).collect(),
            })
            .collect();
        (p, seqs)
    }

    #[test]
    fn uniform_single_token() {
        let p = CrfParams::zeros(ModelShape::new(4, 0, 0, 0));
        let seq = Sequence {
            id: "a".into(),
            features: vec![FeatureVector {
                sparse: vec![1],
                dense: vec![],
            }],
            labels: vec![Label::Toxic],
        };
        let (loss, _) = neg_log_likelihood_and_grad(&p, &[seq], 0.0).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for layers in 0..=2 {
            let (p, seqs) = random_instance(&mut rng, layers);
            let (_, g) = neg_log_likelihood_and_grad(&p, &seqs, 0.01).unwrap();
            let eps = 1e-5;
            let mut q = p.clone();
            let sizes: Vec<usize> = p.arrays().iter().map(|a| a.len()).collect();
            for (ai, &size) in sizes.iter().enumerate() {
                for k in 0..size {
                    let orig = q.arrays()[ai][k];
                    q.arrays_mut()[ai][k] = orig + eps;
                    let up = neg_log_likelihood(&q, &seqs, 0.01).unwrap();
                    q.arrays_mut()[ai][k] = orig - eps;
                    let down = neg_log_likelihood(&q, &seqs, 0.01).unwrap();
                    q.arrays_mut()[ai][k] = orig;
                    let numeric = (up - down) / (2.0 * eps);
                    let analytic = g.arrays()[ai][k];
                    let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                    assert!(rel < 1e-4, "layers {layers} array {ai}[{k}]: {analytic} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn duplicate_doubles_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (p, seqs) = random_instance(&mut rng, 1);
        let one = &seqs[..1];
        let two = [seqs[0].clone(), seqs[0].clone()];
        let (l1, g1) = neg_log_likelihood_and_grad(&p, one, 0.0).unwrap();
        let (l2, g2) = neg_log_likelihood_and_grad(&p, &two, 0.0).unwrap();
        assert_eq!(2.0 * l1, l2);
        for (a, b) in g1.arrays().iter().zip(g2.arrays()) {
            for (x, y) in a.iter().zip(b) {
                assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn non_finite_reports_sequence() {
        let mut p = CrfParams::zeros(ModelShape::new(2, 0, 0, 0));
        p.emission[0] = f64::INFINITY;
        let seq = Sequence {
            id: "post-17".into(),
            features: vec![FeatureVector {
                sparse: vec![0],
                dense: vec![],
            }],
            labels: vec![Label::NonToxic],
        };
        match neg_log_likelihood_and_grad(&p, &[seq], 0.0) {
            Err(Error::Numerical(m)) => assert!(m.contains("post-17")),
            other => panic!("{other:?}"),
        }
    }
}
