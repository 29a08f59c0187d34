#![no_main]

use libfuzzer_sys::fuzz_target;
use newsagent::graph::snapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(store) = snapshot::from_bytes(data) {
        let bytes = snapshot::to_bytes(&store);
        let back = snapshot::from_bytes(&bytes).expect("saved snapshot loads");
        assert_eq!(snapshot::to_bytes(&back), bytes);
    }
});
