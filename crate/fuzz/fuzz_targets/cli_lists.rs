#![no_main]

use bellkit_core::io::{parse_angle_list, parse_count_list};
use bellkit_core::{AngleConfig, Convention};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(angles) = parse_angle_list(text) {
        assert!(angles.len() <= 4 && angles.iter().all(|a| a.is_finite()));
        if let Ok(cfg) = AngleConfig::from_degrees(&angles, Convention::Spin) {
            let _ = cfg.settings();
        }
    }
    if let Ok(counts) = parse_count_list(text) {
        assert!(counts.iter().all(|&c| c > 0));
    }
});
