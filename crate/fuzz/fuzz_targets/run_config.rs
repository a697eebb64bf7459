#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::harness::RunConfig;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = RunConfig::parse(data) {
        // Compare rendered text so NaN settings still round-trip.
        let text = cfg.to_toml();
        let again = RunConfig::parse(&text).expect("rendered config parses");
        assert_eq!(again.to_toml(), text);
    }
});
