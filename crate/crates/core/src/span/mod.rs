//! Character-offset span algebra.
//!
//! Offsets count Unicode scalar values of the original post text, never
//! bytes, because gold annotations are character indices.

mod metric;
pub(crate) mod token;

pub use metric::{char_f1, corpus_f1};
pub use token::{project_gold_to_tokens, token_labels_to_index_set, tokenize, Label, Token};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted, duplicate-free set of character offsets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CharIndexSet(Vec<usize>);

/// Half-open run `[start, end)` of character offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::Validation(format!(
                "span start {start} must be below end {end}"
            )));
        }
        Ok(CharSpan { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

impl CharIndexSet {
    pub fn new() -> Self {
        CharIndexSet(Vec::new())
    }

    /// Builds a set from any offsets, sorting and removing duplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        CharIndexSet(indices)
    }

    /// Wraps offsets the caller guarantees to be strictly increasing.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        CharIndexSet(indices)
    }

    pub fn range(start: usize, end: usize) -> Self {
        CharIndexSet((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// True when every offset addresses a character of a `len`-char text.
    pub fn fits_within(&self, len: usize) -> bool {
        self.max().map_or(true, |m| m < len)
    }

    /// Drops offsets `>= len`, returning how many were removed.
    pub fn truncate_to(&mut self, len: usize) -> usize {
        let keep = self.0.partition_point(|&i| i < len);
        let dropped = self.0.len() - keep;
        self.0.truncate(keep);
        dropped
    }

    pub fn intersection_len(&self, other: &CharIndexSet) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn intersection(&self, other: &CharIndexSet) -> CharIndexSet {
        CharIndexSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn union(&self, other: &CharIndexSet) -> CharIndexSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        CharIndexSet(out)
    }

    pub fn is_subset(&self, other: &CharIndexSet) -> bool {
        self.intersection_len(other) == self.len()
    }

    /// Maximal runs of consecutive offsets.
    pub fn to_spans(&self) -> Vec<CharSpan> {
        let mut spans: Vec<CharSpan> = Vec::new();
        for &i in &self.0 {
            match spans.last_mut() {
                Some(last) if last.end == i => last.end = i + 1,
                _ => spans.push(CharSpan {
                    start: i,
                    end: i + 1,
                }),
            }
        }
        spans
    }

    /// Union of all offsets covered by `spans`; overlaps are allowed.
    pub fn from_spans(spans: &[CharSpan]) -> Self {
        let indices = spans.iter().flat_map(|s| s.start..s.end).collect();
        CharIndexSet::from_unsorted(indices)
    }

    /// Parses a bracketed, comma-separated integer list such as `[3, 4, 5]`.
    ///
    /// Whitespace is accepted anywhere between tokens. The result is sorted
    /// and deduplicated. Columns in errors are 1-based character positions.
    pub fn parse_literal(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let skip_ws = |pos: &mut usize| {
            while *pos < chars.len() && chars[*pos].is_whitespace() {
                *pos += 1;
            }
        };
        let err = |pos: usize, msg: &str| Error::parse(1, pos + 1, msg);

        skip_ws(&mut pos);
        if chars.get(pos) != Some(&'[') {
            return Err(err(pos, "expected '['"));
        }
        pos += 1;
        skip_ws(&mut pos);

        let mut values = Vec::new();
        if chars.get(pos) == Some(&']') {
            pos += 1;
        } else {
            loop {
                skip_ws(&mut pos);
                let start = pos;
                let negative = chars.get(pos) == Some(&'-');
                if negative {
                    pos += 1;
                }
                let digits_start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                if digits_start == pos {
                    return Err(err(pos, "expected an integer"));
                }
                if negative {
                    return Err(Error::Validation(format!(
                        "negative character index at column {}",
                        start + 1
                    )));
                }
                let digits: String = chars[digits_start..pos].iter().collect();
                let value: usize = digits
                    .parse()
                    .map_err(|_| err(start, "integer out of range"))?;
                values.push(value);

                skip_ws(&mut pos);
                match chars.get(pos) {
                    Some(',') => pos += 1,
                    Some(']') => {
                        pos += 1;
                        break;
                    }
                    _ => return Err(err(pos, "expected ',' or ']'")),
                }
            }
        }
        skip_ws(&mut pos);
        if pos != chars.len() {
            return Err(err(pos, "trailing characters after ']'"));
        }
        Ok(CharIndexSet::from_unsorted(values))
    }
}

impl fmt::Display for CharIndexSet {
    /// Bracketed list in the shared-task `spans` column format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("]")
    }
}

impl FromIterator<usize> for CharIndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        CharIndexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// Maximal runs of consecutive offsets in `s`.
pub fn index_set_to_spans(s: &CharIndexSet) -> Vec<CharSpan> {
    s.to_spans()
}

pub fn spans_to_index_set(spans: &[CharSpan]) -> CharIndexSet {
    CharIndexSet::from_spans(spans)
}

/// Byte offset of every character position of `text`, plus `text.len()`.
pub fn byte_offsets(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect()
}

/// The substring covering characters `start..end`, if in bounds.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut bytes = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let from = bytes.nth(start)?;
    let to = if end == start { from } else { bytes.nth(end - start - 1)? };
    Some(&text[from..to])
}

/// Number of Unicode scalar values in `text`; the coordinate space of offsets.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}
