use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::span::{tokenize, Token};

use super::normalize;

const BUILTIN_HATE: &str = include_str!("../../data/hate_words.txt");
const BUILTIN_SENTIMENT: &str = include_str!("../../data/sentiment.tsv");
const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Normalized token forms of a lexicon entry, as corpus text would produce.
fn term_tokens(raw: &str) -> Vec<String> {
    tokenize(&normalize(raw).0)
        .into_iter()
        .map(|t| t.norm)
        .collect()
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Yields `(line number, content)` for non-blank, non-comment lines.
fn entries(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// A word list. Entries spanning several tokens match as token n-grams.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    single: HashSet<String>,
    multi: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Self {
        let mut lex = Lexicon::default();
        for (_, line) in entries(text) {
            lex.insert(line);
        }
        lex
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path.as_ref())?))
    }

    /// The hate word list bundled with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_HATE)
    }

    /// Adds an entry; returns false when it normalizes to nothing.
    pub fn insert(&mut self, raw: &str) -> bool {
        let mut toks = term_tokens(raw);
        match toks.len() {
            0 => false,
            1 => {
                self.single.insert(toks.pop().unwrap_or_default());
                true
            }
            _ => {
                if !self.multi.contains(&toks) {
                    self.multi.push(toks);
                }
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.single.len() + self.multi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Single-token membership of an already normalized form.
    pub fn contains(&self, norm: &str) -> bool {
        self.single.contains(norm)
    }

    /// Marks every token covered by a lexicon entry.
    pub fn match_tokens(&self, tokens: &[Token]) -> Vec<bool> {
        let mut hits: Vec<bool> = tokens.iter().map(|t| self.contains(&t.norm)).collect();
        for entry in &self.multi {
            if entry.len() > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - entry.len() {
                let window = &tokens[start..start + entry.len()];
                if window.iter().zip(entry).all(|(t, e)| &t.norm == e) {
                    hits[start..start + entry.len()].fill(true);
                }
            }
        }
        hits
    }
}

/// Word polarity in `[-1, 1]`; unknown words are neutral.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SentimentLexicon {
    polarity: HashMap<String, f64>,
}

impl SentimentLexicon {
    /// Parses `term<TAB>polarity` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut polarity = HashMap::new();
        for (line_no, line) in entries(text) {
            let Some((term, value)) = line.rsplit_once('\t') else {
                return Err(Error::parse(line_no, 1, "expected `term<TAB>polarity`"));
            };
            let column = term.chars().count() + 2;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, column, "polarity is not a number"))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::parse(
                    line_no,
                    column,
                    format!("polarity {value} outside [-1, 1]"),
                ));
            }
            let key = term_tokens(term).join(" ");
            if !key.is_empty() {
                polarity.insert(key, value);
            }
        }
        Ok(SentimentLexicon { polarity })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SENTIMENT).expect("bundled sentiment lexicon is well formed")
    }

    pub fn insert(&mut self, term: &str, polarity: f64) {
        self.polarity
            .insert(term_tokens(term).join(" "), polarity.clamp(-1.0, 1.0));
    }

    pub fn polarity(&self, norm: &str) -> f64 {
        self.polarity.get(norm).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }
}

/// Words removed by the attention selection rules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn parse(text: &str) -> Self {
        StopWords(
            entries(text)
                .flat_map(|(_, l)| term_tokens(l))
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path.as_ref())?))
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STOPWORDS)
    }

    pub fn contains(&self, norm: &str) -> bool {
        self.0.contains(norm)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The word lists shared by the taggers and feature extractors.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    pub hate: Lexicon,
    pub sentiment: SentimentLexicon,
    pub stopwords: StopWords,
}

impl Resources {
    pub fn builtin() -> Self {
        Resources {
            hate: Lexicon::builtin(),
            sentiment: SentimentLexicon::builtin(),
            stopwords: StopWords::builtin(),
        }
    }

    /// Bundled lists, each replaced by the file given for it.
    pub fn load(
        hate: Option<&Path>,
        sentiment: Option<&Path>,
        stopwords: Option<&Path>,
    ) -> Result<Self> {
        Ok(Resources {
            hate: hate.map_or_else(|| Ok(Lexicon::builtin()), Lexicon::load)?,
            sentiment: sentiment.map_or_else(|| Ok(SentimentLexicon::builtin()), SentimentLexicon::load)?,
            stopwords: stopwords.map_or_else(|| Ok(StopWords::builtin()), StopWords::load)?,
        })
    }
}
