#![no_main]

use libfuzzer_sys::fuzz_target;
use mixtailor::attacks::parse_attack;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_attack(text) {
        let printed = spec.to_string();
        assert_eq!(parse_attack(&printed).unwrap(), spec, "{printed}");
    }
});
