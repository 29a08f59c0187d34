#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::dialogue::TextParams;
use newsagent::response::ResponseTemplateSet;

fuzz_target!(|text: &str| {
    if let Ok(set) = ResponseTemplateSet::from_json("en", text) {
        let keys: Vec<String> = set.keys().map(str::to_string).collect();
        for key in keys {
            let _ = set.fill(&key, &TextParams::new());
        }
    }
});
