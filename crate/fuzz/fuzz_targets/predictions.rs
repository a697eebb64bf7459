#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::predictions::{read_predictions, write_predictions};

fuzz_target!(|data: &[u8]| {
    let Ok(preds) = read_predictions(data) else {
        return;
    };
    let mut out = Vec::new();
    write_predictions(&mut out, &preds).unwrap();
    assert_eq!(read_predictions(out.as_slice()).expect("written file reads"), preds);
});
