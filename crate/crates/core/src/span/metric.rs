use super::CharIndexSet;
use crate::error::{Error, Result};

/// Character-overlap Dice F1 of one post.
///
/// Two empty sets score 1; exactly one empty set scores 0.
pub fn char_f1(pred: &CharIndexSet, gold: &CharIndexSet) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let overlap = pred.intersection_len(gold) as f64;
            2.0 * overlap / (pred.len() + gold.len()) as f64
        }
    }
}

/// Unweighted mean of per-post [`char_f1`].
pub fn corpus_f1<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a CharIndexSet, &'a CharIndexSet)>,
{
    let (sum, n) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), (p, g)| (s + char_f1(p, g), n + 1));
    if n == 0 {
        return Err(Error::Data("no posts".into()));
    }
    Ok(sum / n as f64)
}
