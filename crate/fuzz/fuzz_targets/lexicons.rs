#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::corpus::{Lexicon, SentimentLexicon, StopWords};
use toxspans::span::tokenize;

fuzz_target!(|data: &str| {
    let lex = Lexicon::parse(data);
    let _ = SentimentLexicon::parse(data);
    let _ = StopWords::parse(data);
    let toks = tokenize(data);
    assert_eq!(lex.match_tokens(&toks).len(), toks.len());
});
