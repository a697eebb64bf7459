use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::inference::{Emissions, Transitions};
use crate::error::{Error, Result};
use crate::span::Label;

/// Dimensions of a CRF emission network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub n_labels: usize,
    /// Hashed sparse feature space.
    pub n_sparse: usize,
    /// Dense embedding width, 0 without embeddings.
    pub n_dense: usize,
    pub hidden_width: usize,
    /// 0 maps features straight to label scores; 1 or 2 adds tanh layers.
    pub hidden_layers: usize,
}

impl ModelShape {
    pub fn new(n_sparse: usize, n_dense: usize, hidden_width: usize, hidden_layers: usize) -> Self {
        ModelShape {
            n_labels: Label::COUNT,
            n_sparse,
            n_dense,
            hidden_width,
            hidden_layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n_sparse + self.n_dense
    }

    /// Input width of the emission matrix.
    pub fn emission_in(&self) -> usize {
        if self.hidden_layers == 0 {
            self.input_dim()
        } else {
            self.hidden_width
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_labels != Label::COUNT {
            return Err(Error::Validation(format!(
                "model has {} labels, expected {}",
                self.n_labels,
                Label::COUNT
            )));
        }
        if self.hidden_layers > 2 {
            return Err(Error::Validation(format!(
                "at most 2 hidden layers supported, got {}",
                self.hidden_layers
            )));
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::Validation("hidden layers need a non-zero width".into()));
        }
        if self.input_dim() == 0 {
            return Err(Error::Validation("model has no input features".into()));
        }
        Ok(())
    }
}

/// `tanh(W x + b)` with `W` stored row-major as `n_out x n_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_out: usize,
    pub n_in: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// All trainable state of the tagger.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    pub shape: ModelShape,
    pub hidden: Vec<DenseLayer>,
    /// Row-major `L x emission_in`.
    pub emission: Vec<f64>,
    pub transitions: Transitions,
}

/// Intermediate values of one sequence, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Activations {
    /// Post-tanh outputs of each hidden layer, `n x width` row-major.
    pub hidden: Vec<Vec<f64>>,
    pub emissions: Emissions,
}

/// `out[j] = M[j, :] . x` for a sparse-plus-dense input vector.
fn input_matvec(m: &[f64], n_out: usize, n_in: usize, n_sparse: usize, x: &FeatureVector, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate().take(n_out) {
        let row = &m[j * n_in..(j + 1) * n_in];
        let mut s = 0.0;
        for &id in &x.sparse {
            s += row[id as usize];
        }
        for (d, v) in x.dense.iter().enumerate() {
            s += row[n_sparse + d] * v;
        }
        *o = s;
    }
}

fn input_outer_add(g: &mut [f64], n_in: usize, n_sparse: usize, delta: &[f64], x: &FeatureVector) {
    for (j, &dj) in delta.iter().enumerate() {
        if dj == 0.0 {
            continue;
        }
        let row = &mut g[j * n_in..(j + 1) * n_in];
        for &id in &x.sparse {
            row[id as usize] += dj;
        }
        for (d, v) in x.dense.iter().enumerate() {
            row[n_sparse + d] += dj * v;
        }
    }
}

fn dense_matvec(m: &[f64], n_out: usize, n_in: usize, x: &[f64], out: &mut [f64]) {
    for j in 0..n_out {
        out[j] = m[j * n_in..(j + 1) * n_in].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

impl CrfParams {
    pub fn zeros(shape: ModelShape) -> Self {
        let l = shape.n_labels;
        let mut hidden = Vec::with_capacity(shape.hidden_layers);
        let mut n_in = shape.input_dim();
        for _ in 0..shape.hidden_layers {
            hidden.push(DenseLayer {
                n_out: shape.hidden_width,
                n_in,
                weights: vec![0.0; shape.hidden_width * n_in],
                bias: vec![0.0; shape.hidden_width],
            });
            n_in = shape.hidden_width;
        }
        CrfParams {
            shape,
            hidden,
            emission: vec![0.0; l * shape.emission_in()],
            transitions: Transitions::zeros(l),
        }
    }

    /// Weight matrices uniform in `[-0.1, 0.1]`; biases and transition
    /// scores zero.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut p.hidden {
            layer.weights.iter_mut().for_each(|w| *w = rng.gen_range(-0.1..=0.1));
        }
        p.emission.iter_mut().for_each(|w| *w = rng.gen_range(-0.1..=0.1));
        p
    }

    /// Every parameter array in a fixed order: hidden weights and biases
    /// layer by layer, emission, transitions, start, stop.
    pub fn arrays(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.hidden {
            out.push(&layer.weights);
            out.push(&layer.bias);
        }
        out.push(&self.emission);
        out.push(&self.transitions.matrix);
        out.push(&self.transitions.start);
        out.push(&self.transitions.stop);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.hidden {
            out.push(&mut layer.weights);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.emission);
        out.push(&mut self.transitions.matrix);
        out.push(&mut self.transitions.start);
        out.push(&mut self.transitions.stop);
        out
    }

    pub fn n_params(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn sq_norm(&self) -> f64 {
        self.arrays().iter().flat_map(|a| a.iter()).map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.arrays().iter().all(|a| a.iter().all(|x| x.is_finite()))
    }

    /// `self += scale * other`, array by array.
    pub fn add_scaled(&mut self, other: &CrfParams, scale: f64) {
        for (a, b) in self.arrays_mut().into_iter().zip(other.arrays()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.arrays_mut() {
            a.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn check_features(&self, feats: &[FeatureVector]) -> Result<()> {
        let shape = &self.shape;
        for (t, f) in feats.iter().enumerate() {
            if let Some(&id) = f.sparse.iter().find(|&&id| id as usize >= shape.n_sparse) {
                return Err(Error::Validation(format!(
                    "position {t}: sparse feature {id} outside a space of {}",
                    shape.n_sparse
                )));
            }
            if f.dense.len() != shape.n_dense {
                return Err(Error::Validation(format!(
                    "position {t}: dense width {} but model expects {}",
                    f.dense.len(),
                    shape.n_dense
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, feats: &[FeatureVector]) -> Result<Activations> {
        self.check_features(feats)?;
        let shape = &self.shape;
        let (n, l) = (feats.len(), shape.n_labels);
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        for (k, layer) in self.hidden.iter().enumerate() {
            let mut out = vec![0.0; n * layer.n_out];
            for t in 0..n {
                let row = &mut out[t * layer.n_out..(t + 1) * layer.n_out];
                if k == 0 {
                    input_matvec(&layer.weights, layer.n_out, layer.n_in, shape.n_sparse, &feats[t], row);
                } else {
                    let prev = &hidden[k - 1][t * layer.n_in..(t + 1) * layer.n_in];
                    dense_matvec(&layer.weights, layer.n_out, layer.n_in, prev, row);
                }
                for (o, b) in row.iter_mut().zip(&layer.bias) {
                    *o = (*o + b).tanh();
                }
            }
            hidden.push(out);
        }
        let n_in = shape.emission_in();
        let mut scores = vec![0.0; n * l];
        for t in 0..n {
            let row = &mut scores[t * l..(t + 1) * l];
            match hidden.last() {
                None => input_matvec(&self.emission, l, n_in, shape.n_sparse, &feats[t], row),
                Some(h) => dense_matvec(&self.emission, l, n_in, &h[t * n_in..(t + 1) * n_in], row),
            }
        }
        Ok(Activations {
            hidden,
            emissions: Emissions::new(l, scores),
        })
    }

    /// Adds the gradient of a loss with respect to every emission-network
    /// parameter into `grad`, given `d_emissions = dLoss/dScores` (`n x L`).
    pub fn backprop_emissions(
        &self,
        feats: &[FeatureVector],
        acts: &Activations,
        d_emissions: &[f64],
        grad: &mut CrfParams,
    ) {
        let shape = &self.shape;
        let (n, l) = (feats.len(), shape.n_labels);
        let n_in = shape.emission_in();
        let layers = self.hidden.len();
        let mut delta: Vec<f64> = Vec::new();
        for t in 0..n {
            let de = &d_emissions[t * l..(t + 1) * l];
            if layers == 0 {
                input_outer_add(&mut grad.emission, n_in, shape.n_sparse, de, &feats[t]);
                continue;
            }
            let h = &acts.hidden[layers - 1][t * n_in..(t + 1) * n_in];
            // dE += de h^T, then pull the error back through E.
            delta.clear();
            delta.resize(n_in, 0.0);
            for (j, &dj) in de.iter().enumerate() {
                let row = &self.emission[j * n_in..(j + 1) * n_in];
                let grow = &mut grad.emission[j * n_in..(j + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += dj * h[i];
                    delta[i] += dj * row[i];
                }
            }
            for k in (0..layers).rev() {
                let layer = &self.hidden[k];
                let out = &acts.hidden[k][t * layer.n_out..(t + 1) * layer.n_out];
                for (d, a) in delta.iter_mut().zip(out) {
                    *d *= 1.0 - a * a;
                }
                let g = &mut grad.hidden[k];
                for (gb, d) in g.bias.iter_mut().zip(&delta) {
                    *gb += d;
                }
                if k == 0 {
                    input_outer_add(&mut g.weights, layer.n_in, shape.n_sparse, &delta, &feats[t]);
                } else {
                    let input = &acts.hidden[k - 1][t * layer.n_in..(t + 1) * layer.n_in];
                    let mut below = vec![0.0; layer.n_in];
                    for (j, &dj) in delta.iter().enumerate() {
                        let row = &layer.weights[j * layer.n_in..(j + 1) * layer.n_in];
                        let grow = &mut g.weights[j * layer.n_in..(j + 1) * layer.n_in];
                        for i in 0..layer.n_in {
                            grow[i] += dj * input[i];
                            below[i] += dj * row[i];
                        }
                    }
                    delta = below;
                }
            }
        }
    }
}

/// Emission scores `E . h(x)` of a featurized sequence.
pub fn emission_scores(params: &CrfParams, feats: &[FeatureVector]) -> Result<Emissions> {
    Ok(params.forward(feats)?.emissions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(sparse: &[u32], dense: &[f64]) -> FeatureVector {
        FeatureVector {
            sparse: sparse.to_vec(),
            dense: dense.to_vec(),
        }
    }

    #[test]
    fn zero_weights_give_zero_scores() {
        let p = CrfParams::zeros(ModelShape::new(8, 2, 4, 2));
        let em = emission_scores(&p, &[fv(&[1, 3], &[0.5, -1.0]), fv(&[], &[1.0, 1.0])]).unwrap();
        assert!(em.scores.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_hot_selects_a_column() {
        let mut p = CrfParams::zeros(ModelShape::new(4, 0, 0, 0));
        for (k, w) in p.emission.iter_mut().enumerate() {
            *w = k as f64;
        }
        let em = emission_scores(&p, &[fv(&[2], &[])]).unwrap();
        // Column 2 of the 3 x 4 matrix.
        assert_eq!(em.row(0), &[2.0, 6.0, 10.0]);
    }

    #[test]
    fn matches_naive_matrix_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shape = ModelShape::new(5, 3, 4, 2);
        let p = CrfParams::init(shape, 1);
        let mut p = p;
        for a in p.arrays_mut() {
            a.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
        let feats: Vec<FeatureVector> = (0..4)
            .map(|_| fv(&[rng.gen_range(0..5)], &[rng.gen(), rng.gen(), rng.gen()]))
            .collect();
        let em = emission_scores(&p, &feats).unwrap();
        for (t, f) in feats.iter().enumerate() {
            let mut x = vec![0.0; 8];
            for &id in &f.sparse {
                x[id as usize] += 1.0;
            }
            x[5..].copy_from_slice(&f.dense);
            for layer in &p.hidden {
                let mut y = vec![0.0; layer.n_out];
                for j in 0..layer.n_out {
                    let mut s = layer.bias[j];
                    for i in 0..layer.n_in {
                        s += layer.weights[j * layer.n_in + i] * x[i];
                    }
                    y[j] = s.tanh();
                }
                x = y;
            }
            for lab in 0..3 {
                let expected: f64 = (0..4).map(|i| p.emission[lab * 4 + i] * x[i]).sum();
                assert!((em.get(t, lab) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = CrfParams::zeros(ModelShape::new(4, 2, 0, 0));
        assert!(emission_scores(&p, &[fv(&[4], &[0.0, 0.0])]).is_err());
        assert!(emission_scores(&p, &[fv(&[1], &[0.0])]).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(ModelShape::new(4, 0, 0, 0).validate().is_ok());
        assert!(ModelShape::new(4, 0, 0, 1).validate().is_err());
        assert!(ModelShape::new(4, 0, 3, 3).validate().is_err());
        assert!(ModelShape::new(0, 0, 0, 0).validate().is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let shape = ModelShape::new(16, 2, 3, 1);
        let a = CrfParams::init(shape, 4);
        assert_eq!(a, CrfParams::init(shape, 4));
        assert_ne!(a, CrfParams::init(shape, 5));
        assert!(a.arrays().iter().flat_map(|x| x.iter()).all(|w| w.abs() <= 0.1));
        assert!(a.transitions.matrix.iter().all(|&w| w == 0.0));
        assert_eq!(a.n_params(), 3 * 18 + 3 + 3 * 3 + 9 + 3 + 3);
    }
}
