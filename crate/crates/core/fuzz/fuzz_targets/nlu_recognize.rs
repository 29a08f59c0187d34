#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::nlu::{Nlu, NluContext};

fuzz_target!(|input: (&str, Vec<String>)| {
    let (text, suggestions) = input;
    let nlu = Nlu::builtin();
    let ctx = NluContext { suggestions };
    for lang in ["en", "de"] {
        let r = nlu.recognize(text, lang, &ctx).expect("builtin language");
        assert!((0.0..=1.0).contains(&r.confidence));
    }
});
