#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::CharIndexSet;

fuzz_target!(|data: &str| {
    if let Ok(set) = CharIndexSet::parse_literal(data) {
        let again = CharIndexSet::parse_literal(&set.to_string()).expect("rendered literal parses");
        assert_eq!(again, set);
    }
});
