#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::linking::Gazetteer;

fuzz_target!(|text: &str| {
    if let Ok(g) = Gazetteer::from_json(text) {
        let mentions = g.annotate(text, 0.0);
        for w in mentions.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }
});
