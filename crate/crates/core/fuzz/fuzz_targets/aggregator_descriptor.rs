#![no_main]

use libfuzzer_sys::fuzz_target;
use mixtailor::aggregators::{parse_aggregator, AggregatorDescriptor};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(AggregatorDescriptor::Rule(spec)) = parse_aggregator(text) {
        let printed = spec.to_string();
        assert_eq!(parse_aggregator(&printed).unwrap(), AggregatorDescriptor::Rule(spec), "{printed}");
    }
});
