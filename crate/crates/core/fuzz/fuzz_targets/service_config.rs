#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::service::ServiceConfig;

fuzz_target!(|text: &str| {
    let _ = ServiceConfig::from_toml(text, std::iter::empty());
});
