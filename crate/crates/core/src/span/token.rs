use serde::{Deserialize, Serialize};

use super::CharIndexSet;

/// Tag assigned to a token. `Pad` only labels padding positions during
/// CRF training and is mapped to `NonToxic` before any output is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Toxic = 0,
    NonToxic = 1,
    Pad = 2,
}

impl Label {
    pub const COUNT: usize = 3;
    pub const ALL: [Label; 3] = [Label::Toxic, Label::NonToxic, Label::Pad];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn is_toxic(self) -> bool {
        self == Label::Toxic
    }

    /// Collapses the structural `Pad` label onto `NonToxic`.
    pub fn unpadded(self) -> Label {
        match self {
            Label::Pad => Label::NonToxic,
            l => l,
        }
    }
}

/// A word or symbol with its location in the original text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Character offset of the first scalar, inclusive.
    pub start: usize,
    /// Character offset one past the last scalar.
    pub end: usize,
    /// Lowercased surface.
    pub norm: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, start: usize, end: usize) -> Self {
        let surface = surface.into();
        let norm = lowercase(&surface);
        Token {
            surface,
            start,
            end,
            norm,
        }
    }

    pub fn char_len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_word(&self) -> bool {
        self.surface.chars().any(char::is_alphanumeric)
    }
}

/// Lowercases `c` only when the result is exactly one scalar, so that
/// character offsets survive the mapping.
pub(crate) fn lower_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

pub(crate) fn lowercase(s: &str) -> String {
    s.chars().map(lower_char).collect()
}

/// Characters allowed inside a word when flanked by alphanumerics.
pub(crate) fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '_' | '$' | '*' | '@' | '#')
}

/// Splits `text` into offset-exact tokens.
///
/// A token is either a word, `alnum+ (joiner+ alnum+)*` with joiners drawn
/// from `' - _ $ * @ #`, or a single character that is neither whitespace
/// nor alphanumeric. Obfuscated words such as `a$$hole` stay whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |ci: usize| chars.get(ci).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            let mut end = i + 1;
            loop {
                while end < chars.len() && chars[end].1.is_alphanumeric() {
                    end += 1;
                }
                let mut j = end;
                while j < chars.len() && is_joiner(chars[j].1) {
                    j += 1;
                }
                if j > end && j < chars.len() && chars[j].1.is_alphanumeric() {
                    end = j;
                } else {
                    break;
                }
            }
            i = end;
        } else {
            i += 1;
        }
        tokens.push(Token::new(&text[byte_at(start)..byte_at(i)], start, i));
    }
    tokens
}

/// Labels a token `Toxic` when any of its characters is in `gold`.
pub fn project_gold_to_tokens(gold: &CharIndexSet, tokens: &[Token]) -> Vec<Label> {
    let g = gold.as_slice();
    tokens
        .iter()
        .map(|t| {
            let first = g.partition_point(|&i| i < t.start);
            if first < g.len() && g[first] < t.end {
                Label::Toxic
            } else {
                Label::NonToxic
            }
        })
        .collect()
}

/// Character offsets covered by `Toxic` tokens, plus everything between two
/// `Toxic` tokens that are adjacent in token order.
///
/// # Panics
///
/// If `labels` and `tokens` differ in length.
pub fn token_labels_to_index_set(tokens: &[Token], labels: &[Label]) -> CharIndexSet {
    assert_eq!(tokens.len(), labels.len(), "one label per token");
    let mut out = Vec::new();
    let mut prev_toxic_end: Option<usize> = None;
    for (t, &l) in tokens.iter().zip(labels) {
        if l.unpadded().is_toxic() {
            out.extend(prev_toxic_end.unwrap_or(t.start)..t.end);
            prev_toxic_end = Some(t.end);
        } else {
            prev_toxic_end = None;
        }
    }
    CharIndexSet::from_sorted(out)
}
