//! Random and keyword taggers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Lexicon, SentimentLexicon};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::span::{token_labels_to_index_set, tokenize, CharIndexSet, Label, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Random,
    Hate,
    Sentiment,
    Combined,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 4] = [
        BaselineMethod::Random,
        BaselineMethod::Hate,
        BaselineMethod::Sentiment,
        BaselineMethod::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Random => "random",
            BaselineMethod::Hate => "hate",
            BaselineMethod::Sentiment => "sentiment",
            BaselineMethod::Combined => "combined",
        }
    }
}

impl std::str::FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown baseline method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub p_toxic: f64,
    pub seed: u64,
    pub use_hate: bool,
    pub use_negative_sentiment: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            p_toxic: 0.5,
            seed: 0,
            use_hate: true,
            use_negative_sentiment: true,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_toxic) {
            return Err(Error::Validation(format!(
                "p_toxic {} outside [0, 1]",
                self.p_toxic
            )));
        }
        Ok(())
    }
}

fn label(toxic: bool) -> Label {
    if toxic {
        Label::Toxic
    } else {
        Label::NonToxic
    }
}

/// Labels each token `Toxic` independently with probability `p_toxic`.
pub fn random_tagger(tokens: &[Token], p_toxic: f64, seed: u64) -> Vec<Label> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tokens
        .iter()
        .map(|_| label(rng.gen::<f64>() < p_toxic))
        .collect()
}

pub fn hate_lexicon_tagger(tokens: &[Token], lexicon: &Lexicon) -> Vec<Label> {
    lexicon.match_tokens(tokens).into_iter().map(label).collect()
}

pub fn sentiment_tagger(tokens: &[Token], sentiment: &SentimentLexicon) -> Vec<Label> {
    tokens
        .iter()
        .map(|t| label(sentiment.polarity(&t.norm) < 0.0))
        .collect()
}

/// Per-token union of the hate-lexicon and sentiment taggers.
pub fn combined_tagger(
    tokens: &[Token],
    lexicon: &Lexicon,
    sentiment: &SentimentLexicon,
) -> Vec<Label> {
    hate_lexicon_tagger(tokens, lexicon)
        .into_iter()
        .zip(sentiment_tagger(tokens, sentiment))
        .map(|(a, b)| label(a.is_toxic() || b.is_toxic()))
        .collect()
}

/// A ready-to-run baseline with its resources.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub method: BaselineMethod,
    pub config: TaggerConfig,
    pub lexicon: Lexicon,
    pub sentiment: SentimentLexicon,
}

impl Baseline {
    pub fn new(
        method: BaselineMethod,
        config: TaggerConfig,
        lexicon: Lexicon,
        sentiment: SentimentLexicon,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Baseline {
            method,
            config,
            lexicon,
            sentiment,
        })
    }

    pub fn label_tokens(&self, post_id: &str, tokens: &[Token]) -> Vec<Label> {
        match self.method {
            BaselineMethod::Random => random_tagger(
                tokens,
                self.config.p_toxic,
                derive_seed(self.config.seed, post_id),
            ),
            BaselineMethod::Hate => hate_lexicon_tagger(tokens, &self.lexicon),
            BaselineMethod::Sentiment => sentiment_tagger(tokens, &self.sentiment),
            BaselineMethod::Combined => {
                let hate = if self.config.use_hate {
                    hate_lexicon_tagger(tokens, &self.lexicon)
                } else {
                    vec![Label::NonToxic; tokens.len()]
                };
                if !self.config.use_negative_sentiment {
                    return hate;
                }
                hate.into_iter()
                    .zip(sentiment_tagger(tokens, &self.sentiment))
                    .map(|(a, b)| label(a.is_toxic() || b.is_toxic()))
                    .collect()
            }
        }
    }

    /// Predicted toxic offsets of one post. Random labels are seeded by the
    /// run seed and the post id, so the output does not depend on corpus order.
    pub fn predict(&self, post_id: &str, text: &str) -> CharIndexSet {
        let tokens = tokenize(text);
        let labels = self.label_tokens(post_id, &tokens);
        token_labels_to_index_set(&tokens, &labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<Token> {
        tokenize(text)
    }

    #[test]
    fn random_extremes() {
        let t = toks("a b c d e f");
        assert!(random_tagger(&t, 0.0, 3).iter().all(|l| *l == Label::NonToxic));
        assert!(random_tagger(&t, 1.0, 3).iter().all(|l| *l == Label::Toxic));
        assert_eq!(random_tagger(&t, 0.5, 9), random_tagger(&t, 0.5, 9));
    }

    #[test]
    fn random_rate_is_roughly_p() {
        let text = "w ".repeat(20_000);
        let labels = random_tagger(&toks(&text), 0.3, 1);
        let rate = labels.iter().filter(|l| l.is_toxic()).count() as f64 / labels.len() as f64;
        assert!((rate - 0.3).abs() < 0.02, "{rate}");
    }

    #[test]
    fn hate_tagger_examples() {
        let lex = Lexicon::parse("idiot");
        assert_eq!(
            hate_lexicon_tagger(&toks("you idiot"), &lex),
            vec![Label::NonToxic, Label::Toxic]
        );
        assert!(hate_lexicon_tagger(&toks("you idiot"), &Lexicon::default())
            .iter()
            .all(|l| *l == Label::NonToxic));
        assert_eq!(
            hate_lexicon_tagger(&toks("You IDIOT!"), &lex),
            vec![Label::NonToxic, Label::Toxic, Label::NonToxic]
        );
    }

    #[test]
    fn sentiment_tagger_examples() {
        let mut sent = SentimentLexicon::default();
        sent.insert("terrible", -0.6);
        sent.insert("great", 0.8);
        assert_eq!(
            sentiment_tagger(&toks("terrible great unknown"), &sent),
            vec![Label::Toxic, Label::NonToxic, Label::NonToxic]
        );
    }

    #[test]
    fn combined_is_union() {
        let lex = Lexicon::parse("idiot");
        let mut sent = SentimentLexicon::default();
        sent.insert("terrible", -0.6);
        assert_eq!(
            combined_tagger(&toks("idiot terrible fine"), &lex, &sent),
            vec![Label::Toxic, Label::Toxic, Label::NonToxic]
        );
    }

    #[test]
    fn baseline_predicts_offsets() {
        let b = Baseline::new(
            BaselineMethod::Hate,
            TaggerConfig::default(),
            Lexicon::parse("idiotic\nstupid"),
            SentimentLexicon::default(),
        )
        .unwrap();
        let text = "you have terrible judgment and pick exceptionally idiotic arrogant leaders";
        let start = text.find("idiotic").unwrap();
        assert_eq!(b.predict("0", text), CharIndexSet::range(start, start + 7));
    }

    #[test]
    fn method_names_parse() {
        for m in BaselineMethod::ALL {
            assert_eq!(m.name().parse::<BaselineMethod>().unwrap(), m);
        }
        assert!("nope".parse::<BaselineMethod>().is_err());
        let bad = TaggerConfig {
            p_toxic: 1.5,
            ..TaggerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn words() -> impl Strategy<Value = Vec<&'static str>> {
        proptest::collection::vec(
            prop_oneof![Just("idiot"), Just("moron"), Just("bad"), Just("nice"), Just("x"), Just("!")],
            0..20,
        )
    }

    proptest! {
        #[test]
        fn combined_dominates_parts(ws in words()) {
            let lex = Lexicon::parse("idiot");
            let mut sent = SentimentLexicon::default();
            sent.insert("bad", -0.5);
            sent.insert("nice", 0.5);
            let t = toks(&ws.join(" "));
            let c = combined_tagger(&t, &lex, &sent);
            for (i, l) in c.iter().enumerate() {
                if hate_lexicon_tagger(&t, &lex)[i].is_toxic() || sentiment_tagger(&t, &sent)[i].is_toxic() {
                    prop_assert!(l.is_toxic());
                }
            }
        }

        #[test]
        fn hate_tagger_monotone_in_lexicon(ws in words(), extra in prop_oneof![Just("moron"), Just("x"), Just("bad")]) {
            let small = Lexicon::parse("idiot");
            let mut big = small.clone();
            big.insert(extra);
            let t = toks(&ws.join(" "));
            let a = hate_lexicon_tagger(&t, &small);
            let b = hate_lexicon_tagger(&t, &big);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!x.is_toxic() || y.is_toxic());
            }
        }
    }
}
