#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::corpus::{read_sentence_dataset, SentenceColumns};

fuzz_target!(|data: &[u8]| {
    let _ = read_sentence_dataset(data, 0.5, &SentenceColumns::default(), None);
});
