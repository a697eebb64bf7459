//! Dataset ingestion: the span-annotated task CSV, the sentence-level
//! toxicity CSV, and word lists.

mod lexicon;
mod normalize;
mod sentence;

pub use lexicon::{Lexicon, Resources, SentimentLexicon, StopWords};
pub use normalize::{normalize, OffsetMap};
pub use sentence::{
    balanced_sample, load_sentence_dataset, read_sentence_dataset, SentenceColumns,
    SentenceLoad, SentencePost, DEFAULT_HATE_THRESHOLD,
};

use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::{char_len, CharIndexSet};

/// A post with its gold toxic character offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedPost {
    pub id: String,
    pub text: String,
    pub gold: CharIndexSet,
}

impl AnnotatedPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>, gold: CharIndexSet) -> Self {
        AnnotatedPost {
            id: id.into(),
            text: text.into(),
            gold,
        }
    }
}

/// Counters reported by the task-CSV loader.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpansLoad {
    pub rows: usize,
    pub skipped_rows: usize,
    /// Gold offsets at or beyond the end of their text.
    pub dropped_indices: usize,
    /// Posts whose gold set lost at least one offset.
    pub repaired_posts: usize,
}

/// Parses a `spans` column value such as `[3, 4, 5]`.
pub fn parse_span_literal(s: &str) -> Result<CharIndexSet> {
    CharIndexSet::parse_literal(s)
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads the toxic-spans task CSV (columns `spans`, `text`, optional `id`).
///
/// Rows that cannot be read or whose span literal does not parse are
/// skipped and counted. Out-of-range gold offsets are dropped.
pub fn load_toxic_spans(
    path: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<(Vec<AnnotatedPost>, SpansLoad)> {
    let path = path.as_ref();
    let (posts, stats) = read_toxic_spans(open(path)?, limit)?;
    if stats.skipped_rows > 0 || stats.dropped_indices > 0 {
        warn!(
            "{}: skipped {} rows, dropped {} out-of-range gold offsets",
            path.display(),
            stats.skipped_rows,
            stats.dropped_indices
        );
    }
    Ok((posts, stats))
}

/// Reader-based form of [`load_toxic_spans`].
pub fn read_toxic_spans<R: Read>(
    reader: R,
    limit: Option<usize>,
) -> Result<(Vec<AnnotatedPost>, SpansLoad)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let spans_col = column("spans")
        .ok_or_else(|| Error::Data("task CSV has no `spans` column".into()))?;
    let text_col =
        column("text").ok_or_else(|| Error::Data("task CSV has no `text` column".into()))?;
    let id_col = column("id");

    let mut posts = Vec::new();
    let mut stats = SpansLoad::default();
    for (row, record) in rdr.records().enumerate() {
        if limit.is_some_and(|l| posts.len() >= l) {
            break;
        }
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                stats.skipped_rows += 1;
                continue;
            }
        };
        let (Some(spans), Some(text)) = (record.get(spans_col), record.get(text_col)) else {
            stats.skipped_rows += 1;
            continue;
        };
        let Ok(mut gold) = CharIndexSet::parse_literal(spans) else {
            stats.skipped_rows += 1;
            continue;
        };
        let dropped = gold.truncate_to(char_len(text));
        if dropped > 0 {
            stats.dropped_indices += dropped;
            stats.repaired_posts += 1;
        }
        let id = id_col
            .and_then(|c| record.get(c))
            .map_or_else(|| row.to_string(), str::to_string);
        posts.push(AnnotatedPost::new(id, text, gold));
    }
    stats.rows = posts.len();
    Ok((posts, stats))
}

/// Writes posts back out in the task CSV layout.
pub fn write_toxic_spans<W: std::io::Write>(writer: W, posts: &[AnnotatedPost]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "spans", "text"])?;
    for p in posts {
        w.write_record([p.id.as_str(), &p.gold.to_string(), &p.text])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
