#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::attn::interchange::read_interchange;
use toxspans::attn::ScoredPost;
use toxspans::corpus::Resources;

fuzz_target!(|data: &[u8]| {
    let Ok(ix) = read_interchange(data) else {
        return;
    };
    // Records that pass validation must be usable downstream.
    let res = Resources::builtin();
    for rec in &ix.records {
        ScoredPost::from_record(rec, &res).expect("validated record converts");
    }
});
