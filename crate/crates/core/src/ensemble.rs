//! Combining several models' predicted offsets.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictions::Prediction;
use crate::span::CharIndexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    Vote,
    Intersect,
}

impl std::str::FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vote" => Ok(EnsembleMode::Vote),
            "intersect" => Ok(EnsembleMode::Intersect),
            _ => Err(Error::Validation(format!("unknown ensemble mode `{s}`"))),
        }
    }
}

fn check_arity(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Validation(format!(
            "an ensemble needs at least 2 models, got {m}"
        )));
    }
    Ok(())
}

/// Offsets predicted by strictly more than half of the models.
pub fn vote(sets: &[&CharIndexSet]) -> Result<CharIndexSet> {
    check_arity(sets.len())?;
    let mut all: Vec<usize> = sets.iter().flat_map(|s| s.iter()).collect();
    all.sort_unstable();
    let m = sets.len();
    let mut out = Vec::new();
    for run in all.chunk_by(|a, b| a == b) {
        if 2 * run.len() > m {
            out.push(run[0]);
        }
    }
    Ok(CharIndexSet::from_sorted(out))
}

/// Offsets predicted by every model.
pub fn intersect(sets: &[&CharIndexSet]) -> Result<CharIndexSet> {
    check_arity(sets.len())?;
    let mut acc = sets[0].clone();
    for s in &sets[1..] {
        acc = acc.intersection(s);
    }
    Ok(acc)
}

pub fn combine(mode: EnsembleMode, sets: &[&CharIndexSet]) -> Result<CharIndexSet> {
    match mode {
        EnsembleMode::Vote => vote(sets),
        EnsembleMode::Intersect => intersect(sets),
    }
}

/// Combines aligned prediction files post by post, in the order of the
/// first file. Every file must cover exactly the same post ids.
pub fn combine_predictions(mode: EnsembleMode, models: &[Vec<Prediction>]) -> Result<Vec<Prediction>> {
    check_arity(models.len())?;
    let reference: BTreeSet<&str> = models[0].iter().map(|p| p.id.as_str()).collect();
    let indexed: Vec<HashMap<&str, &CharIndexSet>> = models
        .iter()
        .map(|preds| preds.iter().map(|p| (p.id.as_str(), &p.spans)).collect())
        .collect();
    for (k, preds) in indexed.iter().enumerate().skip(1) {
        let ids: BTreeSet<&str> = preds.keys().copied().collect();
        if ids != reference {
            let missing: Vec<&str> = reference.difference(&ids).copied().collect();
            let extra: Vec<&str> = ids.difference(&reference).copied().collect();
            return Err(Error::Validation(format!(
                "model {} post ids differ from model 1: missing {:?}, extra {:?}",
                k + 1,
                missing,
                extra
            )));
        }
    }
    models[0]
        .iter()
        .map(|p| {
            let sets: Vec<&CharIndexSet> = indexed.iter().map(|m| m[p.id.as_str()]).collect();
            Ok(Prediction::new(p.id.clone(), combine(mode, &sets)?))
        })
        .collect()
}
