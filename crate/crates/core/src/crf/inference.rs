//! Exact inference on a linear chain: forward-backward in log space and
//! Viterbi decoding.

use serde::{Deserialize, Serialize};

/// Row-major `n x L` emission scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Emissions {
    pub n_labels: usize,
    pub scores: Vec<f64>,
}

impl Emissions {
    pub fn new(n_labels: usize, scores: Vec<f64>) -> Self {
        assert!(n_labels > 0 && scores.len() % n_labels == 0);
        Emissions { n_labels, scores }
    }

    pub fn zeros(n: usize, n_labels: usize) -> Self {
        Emissions::new(n_labels, vec![0.0; n * n_labels])
    }

    pub fn len(&self) -> usize {
        self.scores.len() / self.n_labels
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.scores[t * self.n_labels..(t + 1) * self.n_labels]
    }

    pub fn get(&self, t: usize, l: usize) -> f64 {
        self.scores[t * self.n_labels + l]
    }
}

/// Label-pair scores plus per-label scores for entering and leaving the
/// chain. `matrix[from * L + to]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transitions {
    pub n_labels: usize,
    pub matrix: Vec<f64>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

impl Transitions {
    pub fn zeros(n_labels: usize) -> Self {
        Transitions {
            n_labels,
            matrix: vec![0.0; n_labels * n_labels],
            start: vec![0.0; n_labels],
            stop: vec![0.0; n_labels],
        }
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.n_labels + to]
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Score of one label path.
pub fn path_score(em: &Emissions, tr: &Transitions, labels: &[usize]) -> f64 {
    assert_eq!(em.len(), labels.len());
    let Some((&first, _)) = labels.split_first() else {
        return 0.0;
    };
    let mut s = tr.start[first] + em.get(0, first);
    for t in 1..labels.len() {
        s += tr.get(labels[t - 1], labels[t]) + em.get(t, labels[t]);
    }
    s + tr.stop[labels[labels.len() - 1]]
}

/// `alpha[t][l]`: log-sum of scores of all prefixes ending in `l` at `t`.
fn forward(em: &Emissions, tr: &Transitions) -> Vec<f64> {
    let (n, l) = (em.len(), em.n_labels);
    let mut alpha = vec![0.0; n * l];
    for j in 0..l {
        alpha[j] = tr.start[j] + em.get(0, j);
    }
    let mut buf = vec![0.0; l];
    for t in 1..n {
        for j in 0..l {
            for i in 0..l {
                buf[i] = alpha[(t - 1) * l + i] + tr.get(i, j);
            }
            alpha[t * l + j] = log_sum_exp(&buf) + em.get(t, j);
        }
    }
    alpha
}

/// `beta[t][l]`: log-sum of scores of all suffixes after `t` given `l` at `t`.
fn backward(em: &Emissions, tr: &Transitions) -> Vec<f64> {
    let (n, l) = (em.len(), em.n_labels);
    let mut beta = vec![0.0; n * l];
    beta[(n - 1) * l..].copy_from_slice(&tr.stop);
    let mut buf = vec![0.0; l];
    for t in (0..n - 1).rev() {
        for i in 0..l {
            for j in 0..l {
                buf[j] = tr.get(i, j) + em.get(t + 1, j) + beta[(t + 1) * l + j];
            }
            beta[t * l + i] = log_sum_exp(&buf);
        }
    }
    beta
}

/// Log of the sum of exponentiated scores over all label paths. An empty
/// sequence has a single empty path of score 0.
pub fn log_partition(em: &Emissions, tr: &Transitions) -> f64 {
    let n = em.len();
    if n == 0 {
        return 0.0;
    }
    let l = em.n_labels;
    let alpha = forward(em, tr);
    let last: Vec<f64> = (0..l).map(|j| alpha[(n - 1) * l + j] + tr.stop[j]).collect();
    log_sum_exp(&last)
}

/// Posterior label distributions of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub log_z: f64,
    /// `n x L`: P(y_t = l).
    pub unary: Vec<f64>,
    /// `(n-1) x L x L`: P(y_t = i, y_{t+1} = j).
    pub pairwise: Vec<f64>,
}

pub fn forward_backward(em: &Emissions, tr: &Transitions) -> Marginals {
    let (n, l) = (em.len(), em.n_labels);
    if n == 0 {
        return Marginals {
            log_z: 0.0,
            unary: Vec::new(),
            pairwise: Vec::new(),
        };
    }
    let alpha = forward(em, tr);
    let beta = backward(em, tr);
    let last: Vec<f64> = (0..l).map(|j| alpha[(n - 1) * l + j] + tr.stop[j]).collect();
    let log_z = log_sum_exp(&last);
    let unary = alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| (a + b - log_z).exp())
        .collect();
    let mut pairwise = vec![0.0; n.saturating_sub(1) * l * l];
    for t in 0..n - 1 {
        for i in 0..l {
            for j in 0..l {
                let s = alpha[t * l + i]
                    + tr.get(i, j)
                    + em.get(t + 1, j)
                    + beta[(t + 1) * l + j]
                    - log_z;
                pairwise[(t * l + i) * l + j] = s.exp();
            }
        }
    }
    Marginals {
        log_z,
        unary,
        pairwise,
    }
}

/// Highest-scoring path and its score. Ties go to the lower label index.
pub fn viterbi(em: &Emissions, tr: &Transitions) -> (Vec<usize>, f64) {
    let (n, l) = (em.len(), em.n_labels);
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut score: Vec<f64> = (0..l).map(|j| tr.start[j] + em.get(0, j)).collect();
    let mut back = vec![0usize; n * l];
    let mut next = vec![0.0; l];
    for t in 1..n {
        for j in 0..l {
            let mut best = 0;
            let mut best_s = score[0] + tr.get(0, j);
            for i in 1..l {
                let s = score[i] + tr.get(i, j);
                if s > best_s {
                    best = i;
                    best_s = s;
                }
            }
            back[t * l + j] = best;
            next[j] = best_s + em.get(t, j);
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut last = 0;
    let mut last_s = score[0] + tr.stop[0];
    for j in 1..l {
        let s = score[j] + tr.stop[j];
        if s > last_s {
            last = j;
            last_s = s;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t * l + path[t]];
    }
    (path, last_s)
}
