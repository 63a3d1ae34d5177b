#![no_main]

use bellkit_core::io::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&json).unwrap(), cfg);
    }
});
