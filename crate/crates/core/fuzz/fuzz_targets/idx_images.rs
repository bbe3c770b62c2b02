#![no_main]

use libfuzzer_sys::fuzz_target;
use mixtailor::harness::parse_idx_images;

fuzz_target!(|data: &[u8]| {
    if let Ok(images) = parse_idx_images(data) {
        let size = images.rows * images.cols;
        assert!(images.pixels.iter().all(|p| p.len() == size && p.iter().all(|v| (0.0..=1.0).contains(v))));
    }
});
