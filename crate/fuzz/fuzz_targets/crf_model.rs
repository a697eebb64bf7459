#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::crf::io::{decode_model, encode_model, Endian};

fuzz_target!(|data: &[u8]| {
    let Ok(model) = decode_model(data) else {
        return;
    };
    let bytes = encode_model(&model, Endian::Little);
    let again = decode_model(&bytes).expect("re-encoded model decodes");
    assert_eq!(encode_model(&again, Endian::Little), bytes);
});
