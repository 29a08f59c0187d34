#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::nlu::{IntentConfig, NluContext};

fuzz_target!(|text: &str| {
    if let Ok(config) = IntentConfig::from_json(text) {
        let _ = config.recognize("tell me the news", &NluContext::default());
    }
});
