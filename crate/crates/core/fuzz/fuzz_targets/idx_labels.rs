#![no_main]

use libfuzzer_sys::fuzz_target;
use mixtailor::harness::{encode_idx_labels, parse_idx_labels};

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = parse_idx_labels(data) {
        let bytes: Vec<u8> = labels.iter().map(|&l| u8::try_from(l).unwrap()).collect();
        assert_eq!(encode_idx_labels(&bytes), data);
    }
});
