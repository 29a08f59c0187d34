#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::query::parse;

fuzz_target!(|text: &str| {
    if let Ok(plan) = parse(text) {
        let again = parse(&plan.to_string()).expect("rendered plan parses");
        assert_eq!(again, plan);
    }
});
