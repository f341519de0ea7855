#![no_main]

use libfuzzer_sys::fuzz_target;
use windcone::config::{parse_config, serialize_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match parse_config(text) {
        Ok(cfg) => {
            // Anything accepted must survive a round trip.
            let again = parse_config(&serialize_config(&cfg)).expect("serialized config parses");
            assert_eq!(again, cfg);
        }
        Err(errs) => assert!(!errs.0.is_empty()),
    }
});
