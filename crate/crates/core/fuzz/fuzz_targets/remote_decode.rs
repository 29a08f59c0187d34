#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::linking::decode_mentions;

fuzz_target!(|input: (&str, &[u8])| {
    let (text, body) = input;
    if let Ok(mentions) = decode_mentions(text, body, 0.5) {
        let len = text.chars().count();
        for m in mentions {
            assert!(m.start < m.end && m.end <= len);
        }
    }
});
