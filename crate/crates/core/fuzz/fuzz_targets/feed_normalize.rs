#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::ingest::normalize;

fuzz_target!(|data: &[u8]| {
    if let Ok(feed) = normalize(data, "fuzz") {
        assert_eq!(feed.fetched, feed.records.len() + feed.rejects.len());
    }
});
