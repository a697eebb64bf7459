//! Hashed feature templates for the CRF emission layer.

use serde::{Deserialize, Serialize};

use crate::corpus::Resources;
use crate::error::{Error, Result};
use crate::hash::fnv1a;
use crate::span::Token;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Sparse features are hashed into `2^hash_bits` buckets.
    pub hash_bits: u32,
    /// Neighbouring words within this distance contribute identity features.
    pub window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_bits: 20,
            window: 2,
        }
    }
}

impl FeatureConfig {
    pub fn space(&self) -> usize {
        1usize << self.hash_bits
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=28).contains(&self.hash_bits) {
            return Err(Error::Validation(format!(
                "hash_bits {} outside 1..=28",
                self.hash_bits
            )));
        }
        Ok(())
    }

    pub fn id(&self, feature: &str) -> u32 {
        (fnv1a(feature.as_bytes()) % self.space() as u64) as u32
    }
}

/// Features of one position: active sparse ids (implicit value 1.0) and an
/// optional dense embedding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sparse: Vec<u32>,
    pub dense: Vec<f64>,
}

const PAD_FEATURE: &str = "__PAD__";

/// The vector carried by padding positions.
pub fn pad_features(cfg: &FeatureConfig, dense_dim: usize) -> FeatureVector {
    FeatureVector {
        sparse: vec![cfg.id(PAD_FEATURE)],
        dense: vec![0.0; dense_dim],
    }
}

fn affixes(norm: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = norm.chars().collect();
    for k in 1..=chars.len().min(3) {
        out.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
        out.push(format!(
            "s{k}={}",
            chars[chars.len() - k..].iter().collect::<String>()
        ));
    }
}

fn shape(surface: &str) -> Option<&'static str> {
    let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() < 2 {
        return None;
    }
    if letters.iter().all(|c| c.is_uppercase()) {
        Some("shape=UPPER")
    } else if letters[0].is_uppercase() {
        Some("shape=Title")
    } else {
        None
    }
}

/// Per-token sparse features plus the matching `dense` rows, if given.
///
/// Templates: bias, word identity, prefixes and suffixes up to three
/// characters, hate-lexicon hit, polarity sign, digit and symbol flags,
/// capitalisation shape, neighbour identities within the window, and
/// sequence-boundary flags.
pub fn featurize(
    tokens: &[Token],
    res: &Resources,
    cfg: &FeatureConfig,
    dense: Option<&[Vec<f64>]>,
) -> Result<Vec<FeatureVector>> {
    if let Some(d) = dense {
        if d.len() != tokens.len() {
            return Err(Error::Validation(format!(
                "{} embeddings for {} tokens",
                d.len(),
                tokens.len()
            )));
        }
    }
    let hate = res.hate.match_tokens(tokens);
    let n = tokens.len();
    let mut out = Vec::with_capacity(n);
    let mut names = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        names.clear();
        names.push("bias".to_string());
        names.push(format!("w={}", t.norm));
        affixes(&t.norm, &mut names);
        if hate[i] {
            names.push("hate".into());
        }
        let polarity = res.sentiment.polarity(&t.norm);
        names.push(
            match polarity.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Less) => "pol=neg",
                Some(std::cmp::Ordering::Greater) => "pol=pos",
                _ => "pol=zero",
            }
            .into(),
        );
        if t.surface.chars().any(|c| c.is_numeric()) {
            names.push("digit".into());
        }
        if t.surface.chars().any(|c| !c.is_alphanumeric()) {
            names.push("sym".into());
        }
        if let Some(s) = shape(&t.surface) {
            names.push(s.into());
        }
        for d in 1..=cfg.window {
            let before = i.checked_sub(d).map_or("<s>", |j| tokens[j].norm.as_str());
            let after = tokens.get(i + d).map_or("</s>", |t| t.norm.as_str());
            names.push(format!("w[-{d}]={before}"));
            names.push(format!("w[+{d}]={after}"));
        }
        if i == 0 {
            names.push("BOS".into());
        }
        if i + 1 == n {
            names.push("EOS".into());
        }
        let mut sparse: Vec<u32> = names.iter().map(|s| cfg.id(s)).collect();
        sparse.sort_unstable();
        sparse.dedup();
        out.push(FeatureVector {
            sparse,
            dense: dense.map_or_else(Vec::new, |d| d[i].clone()),
        });
    }
    Ok(out)
}
