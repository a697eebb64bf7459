use std::io::Read;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Posts scoring strictly above this are hateful.
pub const DEFAULT_HATE_THRESHOLD: f64 = 0.5;

/// A post with a sentence-level toxicity score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentencePost {
    pub id: String,
    pub text: String,
    pub toxicity: f64,
    pub hateful: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceColumns {
    pub id: String,
    pub text: String,
    pub score: String,
}

impl Default for SentenceColumns {
    fn default() -> Self {
        SentenceColumns {
            id: "id".into(),
            text: "comment_text".into(),
            score: "target".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceLoad {
    pub rows: usize,
    /// Scores outside `[0, 1]`.
    pub rejected: usize,
    /// Unreadable rows or unparseable scores.
    pub skipped: usize,
}

pub fn load_sentence_dataset(
    path: impl AsRef<Path>,
    threshold: f64,
    columns: &SentenceColumns,
    limit: Option<usize>,
) -> Result<(Vec<SentencePost>, SentenceLoad)> {
    let path = path.as_ref();
    let (posts, stats) = read_sentence_dataset(super::open(path)?, threshold, columns, limit)?;
    if stats.rejected + stats.skipped > 0 {
        warn!(
            "{}: rejected {} rows with out-of-range scores, skipped {}",
            path.display(),
            stats.rejected,
            stats.skipped
        );
    }
    Ok((posts, stats))
}

pub fn read_sentence_dataset<R: Read>(
    reader: R,
    threshold: f64,
    columns: &SentenceColumns,
    limit: Option<usize>,
) -> Result<(Vec<SentencePost>, SentenceLoad)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Validation(format!(
            "hate threshold {threshold} outside [0, 1]"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("sentence CSV has no `{name}` column")))
    };
    let (id_col, text_col, score_col) = (
        column(&columns.id)?,
        column(&columns.text)?,
        column(&columns.score)?,
    );

    let mut posts = Vec::new();
    let mut stats = SentenceLoad::default();
    for record in rdr.records() {
        if limit.is_some_and(|l| posts.len() >= l) {
            break;
        }
        let Ok(record) = record else {
            stats.skipped += 1;
            continue;
        };
        let fields = (
            record.get(id_col),
            record.get(text_col),
            record.get(score_col).and_then(|s| s.trim().parse::<f64>().ok()),
        );
        let (Some(id), Some(text), Some(toxicity)) = fields else {
            stats.skipped += 1;
            continue;
        };
        if !(0.0..=1.0).contains(&toxicity) {
            stats.rejected += 1;
            continue;
        }
        posts.push(SentencePost {
            id: id.to_string(),
            text: text.to_string(),
            toxicity,
            hateful: toxicity > threshold,
        });
    }
    stats.rows = posts.len();
    Ok((posts, stats))
}

/// Draws `n_total / 2` posts from each class without replacement and
/// returns them in a seed-determined order.
pub fn balanced_sample(
    posts: &[SentencePost],
    n_total: usize,
    seed: u64,
) -> Result<Vec<SentencePost>> {
    if n_total % 2 != 0 {
        return Err(Error::Validation(format!(
            "balanced sample size must be even, got {n_total}"
        )));
    }
    let half = n_total / 2;
    let (hateful, benign): (Vec<&SentencePost>, Vec<&SentencePost>) =
        posts.iter().partition(|p| p.hateful);
    if hateful.len() < half {
        return Err(Error::Data(format!(
            "insufficient hateful posts: need {half}, have {}",
            hateful.len()
        )));
    }
    if benign.len() < half {
        return Err(Error::Data(format!(
            "insufficient non-hateful posts: need {half}, have {}",
            benign.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<SentencePost> = hateful
        .choose_multiple(&mut rng, half)
        .chain(benign.choose_multiple(&mut rng, half))
        .map(|p| (*p).clone())
        .collect();
    out.shuffle(&mut rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(i: usize, toxicity: f64) -> SentencePost {
        SentencePost {
            id: i.to_string(),
            text: format!("post {i}"),
            toxicity,
            hateful: toxicity > 0.5,
        }
    }

    #[test]
    fn threshold_is_strict() {
        let csv = "id,comment_text,target\n1,a,0.7\n2,b,0.5\n3,c,1.2\n4,d,nan?\n5,e,0\n";
        let (posts, stats) =
            read_sentence_dataset(csv.as_bytes(), 0.5, &SentenceColumns::default(), None)
                .unwrap();
        let flags: Vec<(String, bool)> = posts.iter().map(|p| (p.id.clone(), p.hateful)).collect();
        assert_eq!(
            flags,
            vec![("1".into(), true), ("2".into(), false), ("5".into(), false)]
        );
        assert_eq!(stats.rejected, 1);
        assert_eq!(stats.skipped, 1);
    }

    #[test]
    fn custom_columns() {
        let cols = SentenceColumns {
            id: "key".into(),
            text: "body".into(),
            score: "tox".into(),
        };
        let csv = "tox,body,key\n0.9,hey,k1\n";
        let (posts, _) = read_sentence_dataset(csv.as_bytes(), 0.5, &cols, None).unwrap();
        assert_eq!(posts[0].id, "k1");
        assert!(posts[0].hateful);
        let err =
            read_sentence_dataset(csv.as_bytes(), 0.5, &SentenceColumns::default(), None)
                .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn sample_is_balanced_and_seeded() {
        let posts: Vec<SentencePost> = (0..20)
            .map(|i| post(i, if i % 2 == 0 { 0.9 } else { 0.1 }))
            .collect();
        let s = balanced_sample(&posts, 4, 7).unwrap();
        assert_eq!(s.iter().filter(|p| p.hateful).count(), 2);
        assert_eq!(s.len(), 4);
        assert_eq!(s, balanced_sample(&posts, 4, 7).unwrap());
        let ids: std::collections::HashSet<_> = s.iter().map(|p| &p.id).collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn sample_reports_deficient_class() {
        let mut posts: Vec<SentencePost> = (0..10).map(|i| post(i, 0.1)).collect();
        posts.push(post(10, 0.9));
        let err = balanced_sample(&posts, 4, 1).unwrap_err().to_string();
        assert!(err.contains("insufficient hateful"), "{err}");
        assert!(balanced_sample(&posts, 3, 1).is_err());
    }
}
