#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::corpus::read_toxic_spans;
use toxspans::span::{char_slice, tokenize};

fuzz_target!(|data: &[u8]| {
    let Ok((posts, _)) = read_toxic_spans(data, None) else {
        return;
    };
    for p in posts {
        for t in tokenize(&p.text) {
            assert_eq!(char_slice(&p.text, t.start, t.end), Some(t.surface.as_str()));
        }
    }
});
