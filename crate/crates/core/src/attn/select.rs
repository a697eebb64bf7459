use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ScoredPost, WordScore};
use crate::corpus::StopWords;
use crate::error::{Error, Result};
use crate::span::{corpus_f1, token_labels_to_index_set, CharIndexSet, Label};

pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.0, 1e-5, 1e-4, 1e-3, 1e-2];
pub const DEFAULT_PERCENTILES: [f64; 6] = [0.10, 0.25, 0.50, 0.75, 0.90, 1.0];

/// Post-selection filters, each extending the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Drop stop-words.
    R1,
    /// R1, then drop positive-polarity words.
    R2,
    /// R2, then add every hate-lexicon word whatever its attention.
    R3,
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(Rule::R1),
            "R2" => Ok(Rule::R2),
            "R3" => Ok(Rule::R3),
            _ => Err(Error::Validation(format!("unknown rule `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Fraction of words, by descending attention, considered for selection.
    pub percentile: f64,
    /// Minimum attention of a selected word.
    pub threshold: f64,
    pub rule: Rule,
    /// Sentence probability a post must exceed to get any span.
    pub gate: f64,
    /// Gate on gold non-emptiness instead of the sentence probability.
    pub gate_oracle: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            percentile: 0.75,
            threshold: 1e-4,
            rule: Rule::R1,
            gate: 0.5,
            gate_oracle: false,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            return Err(Error::Validation(format!(
                "percentile {} outside (0, 1]",
                self.percentile
            )));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::Validation(format!(
                "threshold {} must be non-negative",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.gate) {
            return Err(Error::Validation(format!("gate {} outside [0, 1]", self.gate)));
        }
        Ok(())
    }
}

/// True when the post's hate probability exceeds `tau`.
pub fn gate(post: &ScoredPost, tau: f64) -> bool {
    post.sent_prob > tau
}

/// Indices of the top `ceil(p * n)` words by attention (earlier words win
/// ties) that also reach `threshold`, in text order.
pub fn select_rule(words: &[WordScore], percentile: f64, threshold: f64) -> Vec<usize> {
    let n = words.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| words[b].attn.total_cmp(&words[a].attn).then(a.cmp(&b)));
    // The small slack keeps e.g. 0.1 * 30 from rounding up to 4.
    let keep = ((percentile * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut selected: Vec<usize> = order[..keep]
        .iter()
        .copied()
        .filter(|&i| words[i].attn >= threshold)
        .collect();
    selected.sort_unstable();
    selected
}

/// Applies a rule set to a [`select_rule`] selection.
pub fn apply_rule_set(
    words: &[WordScore],
    selection: &[usize],
    rule: Rule,
    stopwords: &StopWords,
) -> Vec<usize> {
    let mut out: Vec<usize> = selection
        .iter()
        .copied()
        .filter(|&i| !stopwords.contains(&words[i].token.norm))
        .filter(|&i| rule == Rule::R1 || words[i].polarity <= 0.0)
        .collect();
    if rule == Rule::R3 {
        out.extend((0..words.len()).filter(|&i| words[i].is_hate));
        out.sort_unstable();
        out.dedup();
    }
    out
}

/// Toxic offsets for one post. With `cfg.gate_oracle`, `gold` decides the
/// gate instead of the sentence probability.
pub fn predict_rule(
    post: &ScoredPost,
    cfg: &RuleConfig,
    stopwords: &StopWords,
    gold: Option<&CharIndexSet>,
) -> CharIndexSet {
    let open = match (cfg.gate_oracle, gold) {
        (true, Some(g)) => !g.is_empty(),
        _ => gate(post, cfg.gate),
    };
    if !open {
        return CharIndexSet::new();
    }
    let selection = select_rule(&post.words, cfg.percentile, cfg.threshold);
    let chosen = apply_rule_set(&post.words, &selection, cfg.rule, stopwords);
    let mut labels = vec![Label::NonToxic; post.words.len()];
    for i in chosen {
        labels[i] = Label::Toxic;
    }
    token_labels_to_index_set(&post.tokens(), &labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub percentile: f64,
    pub threshold: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridCell,
    /// Every evaluated cell, ordered by percentile then threshold.
    pub cells: Vec<GridCell>,
}

/// Exhaustively scores every (percentile, threshold) pair on `dev` and
/// returns the best, preferring the smaller percentile and then the larger
/// threshold on ties. `base` supplies the rule, gate and oracle flag.
pub fn grid_search(
    dev: &[(ScoredPost, CharIndexSet)],
    thresholds: &[f64],
    percentiles: &[f64],
    base: &RuleConfig,
    stopwords: &StopWords,
) -> Result<GridResult> {
    if thresholds.is_empty() || percentiles.is_empty() {
        return Err(Error::Validation("grid search needs non-empty grids".into()));
    }
    if dev.is_empty() {
        return Err(Error::Data("no posts".into()));
    }
    let mut pairs: Vec<(f64, f64)> = percentiles
        .iter()
        .flat_map(|&p| thresholds.iter().map(move |&t| (p, t)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();

    let cells = pairs
        .par_iter()
        .map(|&(percentile, threshold)| {
            let cfg = RuleConfig {
                percentile,
                threshold,
                ..base.clone()
            };
            cfg.validate()?;
            let preds: Vec<CharIndexSet> = dev
                .iter()
                .map(|(post, gold)| predict_rule(post, &cfg, stopwords, Some(gold)))
                .collect();
            let f1 = corpus_f1(preds.iter().zip(dev.iter().map(|(_, g)| g)))?;
            Ok(GridCell {
                percentile,
                threshold,
                f1,
            })
        })
        .collect::<Result<Vec<GridCell>>>()?;

    let mut best = cells[0];
    for c in &cells[1..] {
        let better = c.f1 > best.f1
            || (c.f1 == best.f1
                && (c.percentile < best.percentile
                    || (c.percentile == best.percentile && c.threshold > best.threshold)));
        if better {
            best = *c;
        }
    }
    Ok(GridResult { best, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attn::PosTag;
    use crate::span::Token;
    use proptest::prelude::*;

    fn words(spec: &[(&str, f64, f64, bool)]) -> Vec<WordScore> {
        let mut pos = 0;
        spec.iter()
            .map(|&(w, attn, polarity, is_hate)| {
                let len = w.chars().count();
                let token = Token::new(w, pos, pos + len);
                pos += len + 1;
                WordScore {
                    token,
                    attn,
                    pos: PosTag::Noun,
                    polarity,
                    is_hate,
                }
            })
            .collect()
    }

    fn post(spec: &[(&str, f64, f64, bool)], sent_prob: f64) -> ScoredPost {
        let words = words(spec);
        let text = spec.iter().map(|s| s.0).collect::<Vec<_>>().join(" ");
        ScoredPost {
            id: "p".into(),
            text,
            words,
            sent_prob,
            embeddings: None,
        }
    }

    #[test]
    fn gate_is_strict() {
        let p = post(&[("x", 0.1, 0.0, false)], 0.9);
        assert!(gate(&p, 0.5));
        assert!(!gate(&post(&[("x", 0.1, 0.0, false)], 0.1), 0.5));
        assert!(!gate(&post(&[("x", 0.1, 0.0, false)], 0.0), 0.0));
    }

    #[test]
    fn selection_examples() {
        let w = words(&[("a", 0.5, 0.0, false), ("b", 0.4, 0.0, false), ("c", 0.1, 0.0, false)]);
        assert_eq!(select_rule(&w, 0.75, 1e-4), vec![0, 1, 2]);
        assert!(select_rule(&w, 0.75, 1e300).is_empty());
        let w = words(&[
            ("a", 0.1, 0.0, false),
            ("b", 0.4, 0.0, false),
            ("c", 0.9, 0.0, false),
            ("d", 0.2, 0.0, false),
        ]);
        assert_eq!(select_rule(&w, 0.25, 0.0), vec![2]);
        assert_eq!(select_rule(&w, 0.5, 0.3), vec![1, 2]);
        assert_eq!(select_rule(&w, 1.0, 0.15), vec![1, 2, 3]);
    }

    #[test]
    fn ties_prefer_earlier_words() {
        let w = words(&[("a", 0.3, 0.0, false), ("b", 0.5, 0.0, false), ("c", 0.3, 0.0, false)]);
        assert_eq!(select_rule(&w, 0.5, 0.0), vec![0, 1]);
    }

    #[test]
    fn percentile_rounding_is_exact_on_decimal_grids() {
        let w: Vec<WordScore> = (0..30)
            .map(|i| words(&[("w", 1.0 - i as f64 / 100.0, 0.0, false)]).remove(0))
            .collect();
        assert_eq!(select_rule(&w, 0.1, 0.0).len(), 3);
        assert_eq!(select_rule(&w, 0.9, 0.0).len(), 27);
    }

    #[test]
    fn rule_sets() {
        let stop = StopWords::parse("the");
        let w = words(&[
            ("the", 0.9, 0.0, false),
            ("great", 0.8, 0.8, false),
            ("idiot", 0.00001, -0.5, true),
            ("fool", 0.5, -0.5, false),
        ]);
        let sel = select_rule(&w, 1.0, 1e-4);
        assert_eq!(sel, vec![0, 1, 3]);
        assert_eq!(apply_rule_set(&w, &sel, Rule::R1, &stop), vec![1, 3]);
        assert_eq!(apply_rule_set(&w, &sel, Rule::R2, &stop), vec![3]);
        assert_eq!(apply_rule_set(&w, &sel, Rule::R3, &stop), vec![2, 3]);
    }

    #[test]
    fn predict_respects_gate_and_oracle() {
        let stop = StopWords::default();
        let p = post(&[("you", 0.1, 0.0, false), ("idiot", 0.9, 0.0, true)], 0.2);
        let cfg = RuleConfig {
            percentile: 0.5,
            ..RuleConfig::default()
        };
        assert!(predict_rule(&p, &cfg, &stop, None).is_empty());
        let gold = CharIndexSet::range(4, 9);
        assert!(predict_rule(&p, &cfg, &stop, Some(&gold)).is_empty());
        let oracle = RuleConfig {
            gate_oracle: true,
            ..cfg.clone()
        };
        assert_eq!(predict_rule(&p, &oracle, &stop, Some(&gold)), gold);
        assert!(predict_rule(&p, &oracle, &stop, Some(&CharIndexSet::new())).is_empty());
    }

    #[test]
    fn grid_single_cell_matches_direct_evaluation() {
        let stop = StopWords::parse("the");
        let dev = vec![
            (
                post(&[("the", 0.2, 0.0, false), ("idiot", 0.7, 0.0, true), ("ok", 0.1, 0.0, false)], 0.9),
                CharIndexSet::range(4, 9),
            ),
            (post(&[("fine", 0.5, 0.0, false)], 0.1), CharIndexSet::new()),
        ];
        let base = RuleConfig::default();
        let r = grid_search(&dev, &[1e-4], &[0.75], &base, &stop).unwrap();
        assert_eq!(r.cells.len(), 1);
        let direct: Vec<CharIndexSet> = dev
            .iter()
            .map(|(p, g)| predict_rule(p, &base, &stop, Some(g)))
            .collect();
        let expected = corpus_f1(direct.iter().zip(dev.iter().map(|(_, g)| g))).unwrap();
        assert_eq!(r.best.f1, expected);
        assert_eq!((r.best.percentile, r.best.threshold), (0.75, 1e-4));
    }

    #[test]
    fn grid_ties_prefer_small_percentile_then_large_threshold() {
        let stop = StopWords::default();
        let dev = vec![(post(&[("x", 0.5, 0.0, false)], 0.9), CharIndexSet::range(0, 1))];
        let r = grid_search(&dev, &[0.0, 0.1], &[0.5, 1.0], &RuleConfig::default(), &stop).unwrap();
        assert_eq!(r.best.f1, 1.0);
        assert_eq!((r.best.percentile, r.best.threshold), (0.5, 0.1));
        assert!(grid_search(&dev, &[], &[0.5], &RuleConfig::default(), &stop).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RuleConfig::default().validate().is_ok());
        let bad = |f: fn(&mut RuleConfig)| {
            let mut c = RuleConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.percentile = 0.0));
        assert!(bad(|c| c.percentile = 1.1));
        assert!(bad(|c| c.threshold = -1.0));
        assert!(bad(|c| c.gate = 2.0));
        assert_eq!("r3".parse::<Rule>().unwrap(), Rule::R3);
    }

    proptest! {
        #[test]
        fn monotone_in_percentile(
            attn in proptest::collection::vec(0.0f64..1.0, 0..30),
            p1 in 0.01f64..1.0, p2 in 0.01f64..1.0, theta in 0.0f64..0.5,
        ) {
            let spec: Vec<(&str, f64, f64, bool)> = attn.iter().map(|&a| ("w", a, 0.0, false)).collect();
            let w = words(&spec);
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let small = select_rule(&w, lo, theta);
            let big = select_rule(&w, hi, theta);
            prop_assert!(small.iter().all(|i| big.contains(i)));
        }
    }
}
