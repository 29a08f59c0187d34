#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::query::TemplateRegistry;

fuzz_target!(|text: &str| {
    let _ = TemplateRegistry::from_json(text);
});
