//! Span selection from word-level attention scores.
//!
//! A sentence-level hate classifier (run offline, see [`interchange`])
//! gives each post a hate probability and each word an attention score.
//! Posts that do not pass the [`gate`] get no toxic span; for the rest,
//! the highest-attention words are selected by [`select_rule`] and filtered
//! by one of the rule sets in [`Rule`], or labelled by a [`DecisionTree`].

pub mod interchange;
mod pos;
mod select;
mod tree;

pub use interchange::{ExportHeader, ExportRecord, ExportWord, Interchange};
pub use pos::{heuristic_tag, PosTag};
pub use select::{
    apply_rule_set, gate, grid_search, predict_rule, select_rule, GridCell, GridResult, Rule,
    RuleConfig, DEFAULT_PERCENTILES, DEFAULT_THRESHOLDS,
};
pub use tree::{
    predict_tree, train_decision_tree, word_features, word_samples, word_schema, DecisionTree,
    FeatureKind, TreeConfig, TreeSchema,
};

use serde::{Deserialize, Serialize};

use crate::corpus::Resources;
use crate::error::{Error, Result};
use crate::span::{byte_offsets, Token};

/// One word of a scored post with its selector features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub token: Token,
    pub attn: f64,
    pub pos: PosTag,
    pub polarity: f64,
    pub is_hate: bool,
}

/// A post as seen by the attention selectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPost {
    pub id: String,
    pub text: String,
    pub words: Vec<WordScore>,
    /// Sentence-level hate probability.
    pub sent_prob: f64,
    /// Per-word embeddings, when the export carried them.
    pub embeddings: Option<Vec<Vec<f64>>>,
}

impl ScoredPost {
    pub fn tokens(&self) -> Vec<Token> {
        self.words.iter().map(|w| w.token.clone()).collect()
    }

    /// Builds word features for an exported record. The record must already
    /// have passed [`interchange::check_record`].
    pub fn from_record(rec: &ExportRecord, res: &Resources) -> Result<Self> {
        let offsets = byte_offsets(&rec.text);
        let tokens = rec
            .words
            .iter()
            .map(|w| {
                let (Some(&from), Some(&to)) = (offsets.get(w.start), offsets.get(w.end)) else {
                    return Err(Error::Validation(format!(
                        "record `{}`: word {}..{} out of bounds",
                        rec.id, w.start, w.end
                    )));
                };
                Ok(Token::new(&rec.text[from..to], w.start, w.end))
            })
            .collect::<Result<Vec<Token>>>()?;
        let pos: Vec<Option<PosTag>> = rec
            .words
            .iter()
            .map(|w| w.pos.as_deref().map(PosTag::parse))
            .collect();
        let words = build_words(tokens, rec.words.iter().map(|w| w.attn).collect(), pos, res);
        let embeddings = rec
            .words
            .iter()
            .map(|w| w.emb.clone())
            .collect::<Option<Vec<_>>>()
            .filter(|e| !e.is_empty());
        Ok(ScoredPost {
            id: rec.id.clone(),
            text: rec.text.clone(),
            words,
            sent_prob: rec.sent_prob,
            embeddings,
        })
    }
}

/// Reads an export and builds scored posts, keeping at most `limit`
/// records.
pub fn load_scored(
    path: impl AsRef<std::path::Path>,
    res: &Resources,
    limit: Option<usize>,
) -> Result<(ExportHeader, Vec<ScoredPost>)> {
    let mut data = interchange::load_interchange(path)?;
    if let Some(n) = limit {
        data.records.truncate(n);
    }
    let posts = data
        .records
        .iter()
        .map(|r| ScoredPost::from_record(r, res))
        .collect::<Result<Vec<_>>>()?;
    Ok((data.header, posts))
}

fn build_words(
    tokens: Vec<Token>,
    attn: Vec<f64>,
    pos: Vec<Option<PosTag>>,
    res: &Resources,
) -> Vec<WordScore> {
    let hate = res.hate.match_tokens(&tokens);
    tokens
        .into_iter()
        .zip(attn)
        .zip(pos)
        .zip(hate)
        .map(|(((token, attn), pos), is_hate)| WordScore {
            pos: pos.unwrap_or_else(|| heuristic_tag(&token.norm)),
            polarity: res.sentiment.polarity(&token.norm),
            attn,
            is_hate,
            token,
        })
        .collect()
}

/// Mean of a word's subword attention values.
pub fn mean_pool(subword_scores: &[f64]) -> Result<f64> {
    if subword_scores.is_empty() {
        return Err(Error::Validation("word has no subword scores".into()));
    }
    Ok(subword_scores.iter().sum::<f64>() / subword_scores.len() as f64)
}

/// Turns `(word, subword scores)` groups into scored words whose attention
/// is the mean of their subwords.
pub fn pool_subwords(groups: &[(Token, Vec<f64>)], res: &Resources) -> Result<Vec<WordScore>> {
    let attn = groups
        .iter()
        .map(|(_, s)| mean_pool(s))
        .collect::<Result<Vec<f64>>>()?;
    let tokens = groups.iter().map(|(t, _)| t.clone()).collect();
    Ok(build_words(tokens, attn, vec![None; groups.len()], res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Lexicon, SentimentLexicon, StopWords};

    fn res() -> Resources {
        let mut sentiment = SentimentLexicon::default();
        sentiment.insert("great", 0.8);
        Resources {
            hate: Lexicon::parse("idiot"),
            sentiment,
            stopwords: StopWords::parse("the"),
        }
    }

    #[test]
    fn pooling_means() {
        assert!((mean_pool(&[0.2, 0.4]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(mean_pool(&[0.7]).unwrap(), 0.7);
        assert!((mean_pool(&[0.1, 0.2, 0.6]).unwrap() - 0.3).abs() < 1e-15);
        assert!(mean_pool(&[]).is_err());
    }

    #[test]
    fn pooled_words_carry_features() {
        let groups = vec![
            (Token::new("great", 0, 5), vec![0.2, 0.4]),
            (Token::new("idiot", 6, 11), vec![0.9]),
        ];
        let words = pool_subwords(&groups, &res()).unwrap();
        assert!((words[0].attn - 0.3).abs() < 1e-15);
        assert_eq!(words[0].polarity, 0.8);
        assert!(words[1].is_hate && !words[0].is_hate);
        let bad = vec![(Token::new("x", 0, 1), vec![])];
        assert!(pool_subwords(&bad, &res()).is_err());
    }

    #[test]
    fn record_conversion() {
        let rec = ExportRecord {
            id: "r".into(),
            text: "the ïdiot idiot".into(),
            sent_prob: 0.7,
            truncated: false,
            words: vec![
                ExportWord { start: 0, end: 3, attn: 0.1, pos: Some("DET".into()), emb: None },
                ExportWord { start: 4, end: 9, attn: 0.2, pos: None, emb: None },
                ExportWord { start: 10, end: 15, attn: 0.7, pos: None, emb: None },
            ],
        };
        let post = ScoredPost::from_record(&rec, &res()).unwrap();
        assert_eq!(post.words[1].token.surface, "ïdiot");
        assert_eq!(post.words[0].pos, PosTag::Det);
        assert!(post.words[2].is_hate);
        assert!(post.embeddings.is_none());
    }
}
