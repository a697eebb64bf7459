//! Coarse part-of-speech tags for the tree selector.
//!
//! Tags come from the interchange file when the exporter provides them;
//! otherwise a closed-class word list plus suffix rules assigns one.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    Punct,
    X,
}

impl PosTag {
    pub const COUNT: usize = 12;
    pub const ALL: [PosTag; 12] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Pron,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Num,
        PosTag::Conj,
        PosTag::Prt,
        PosTag::Punct,
        PosTag::X,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<PosTag> {
        PosTag::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Num => "NUM",
            PosTag::Conj => "CONJ",
            PosTag::Prt => "PRT",
            PosTag::Punct => ".",
            PosTag::X => "X",
        }
    }

    /// Maps universal and Penn-style tag names onto the coarse set;
    /// anything unrecognised becomes `X`.
    pub fn parse(tag: &str) -> PosTag {
        match tag.trim().to_ascii_uppercase().as_str() {
            "NOUN" | "PROPN" | "NN" | "NNS" | "NNP" | "NNPS" => PosTag::Noun,
            "VERB" | "AUX" | "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" | "MD" => PosTag::Verb,
            "ADJ" | "JJ" | "JJR" | "JJS" => PosTag::Adj,
            "ADV" | "RB" | "RBR" | "RBS" => PosTag::Adv,
            "PRON" | "PRP" | "PRP$" | "WP" | "WP$" => PosTag::Pron,
            "DET" | "DT" | "PDT" | "WDT" => PosTag::Det,
            "ADP" | "IN" => PosTag::Adp,
            "NUM" | "CD" => PosTag::Num,
            "CONJ" | "CCONJ" | "SCONJ" | "CC" => PosTag::Conj,
            "PRT" | "PART" | "RP" | "TO" | "POS" => PosTag::Prt,
            "." | "PUNCT" | "SYM" | "," | ":" => PosTag::Punct,
            _ => PosTag::X,
        }
    }
}

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours",
    "they", "them", "their", "theirs", "themselves", "who", "whom", "whose", "what", "which",
    "anyone", "everyone", "someone", "nobody", "everybody", "somebody", "anything", "everything",
    "something", "nothing", "u", "ya", "ur",
];
const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "no",
    "another", "either", "neither", "all", "both", "such",
];
const ADPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "from", "under", "over", "without", "within",
    "like", "than", "upon", "toward", "towards", "around", "among",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "yet", "so", "because", "although", "though", "while", "if",
    "unless", "whereas", "since", "whether",
];
const PARTICLES: &[&str] = &["to", "not", "n't", "'s", "up", "off", "out"];
const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "do", "does",
    "did", "will", "would", "can", "could", "should", "shall", "may", "might", "must", "get",
    "got", "go", "goes", "went", "make", "made", "say", "said", "know", "think", "see", "want",
    "take", "come", "give", "tell", "let", "keep", "put", "need", "feel", "try", "seem", "pick",
    "deal", "stop", "care", "shut", "kill", "hate", "love", "suck", "sucks", "don't", "doesn't",
    "isn't", "aren't", "can't", "won't",
];
const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "hundred", "thousand", "million", "billion",
];
const ADVERBS: &[&str] = &[
    "very", "too", "just", "also", "never", "always", "often", "again", "here", "there", "now",
    "then", "ever", "even", "still", "already", "only", "really", "quite", "how", "why", "when",
    "where", "well", "almost", "soon",
];

/// Tags one lowercased word form.
pub fn heuristic_tag(norm: &str) -> PosTag {
    if norm.is_empty() {
        return PosTag::X;
    }
    if !norm.chars().any(char::is_alphanumeric) {
        return PosTag::Punct;
    }
    if norm.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') || NUMBER_WORDS.contains(&norm) {
        return PosTag::Num;
    }
    let lists: [(&[&str], PosTag); 8] = [
        (PRONOUNS, PosTag::Pron),
        (DETERMINERS, PosTag::Det),
        (ADPOSITIONS, PosTag::Adp),
        (CONJUNCTIONS, PosTag::Conj),
        (PARTICLES, PosTag::Prt),
        (VERBS, PosTag::Verb),
        (ADVERBS, PosTag::Adv),
        (NUMBER_WORDS, PosTag::Num),
    ];
    if let Some((_, tag)) = lists.iter().find(|(words, _)| words.contains(&norm)) {
        return *tag;
    }
    if !norm.chars().any(|c| c.is_ascii_alphabetic()) {
        return PosTag::X;
    }
    let suffixes: [(&[&str], PosTag); 4] = [
        (&["ly"], PosTag::Adv),
        (&["ous", "ful", "ive", "able", "ible", "less", "ish", "ic", "al", "est"], PosTag::Adj),
        (&["tion", "sion", "ness", "ment", "ity", "ism", "ist", "ship", "hood"], PosTag::Noun),
        (&["ing", "ed", "ize", "ise", "ate", "ify", "en"], PosTag::Verb),
    ];
    for (ends, tag) in suffixes {
        if norm.len() > 4 && ends.iter().any(|s| norm.ends_with(s)) {
            return tag;
        }
    }
    PosTag::Noun
}
