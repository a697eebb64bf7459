#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::corpus::normalize;
use toxspans::span::{char_slice, tokenize};

fuzz_target!(|data: &str| {
    let len = data.chars().count();
    let mut prev_end = 0;
    for t in tokenize(data) {
        assert!(t.start >= prev_end && t.start < t.end && t.end <= len);
        assert_eq!(char_slice(data, t.start, t.end), Some(t.surface.as_str()));
        prev_end = t.end;
    }
    let (norm, map) = normalize(data);
    assert_eq!(map.len(), norm.chars().count());
    assert!(map.as_slice().iter().all(|&i| i < len));
});
