#![no_main]

use libfuzzer_sys::fuzz_target;
use toxspans::attn::DecisionTree;

fuzz_target!(|data: &[u8]| {
    let Ok(tree) = DecisionTree::from_reader(data) else {
        return;
    };
    // Any schema-conforming row must reach a leaf.
    let row = vec![0.0; tree.schema.len()];
    let _ = tree.predict_one(&row);
});
