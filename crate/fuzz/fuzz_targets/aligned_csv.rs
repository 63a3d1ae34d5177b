#![no_main]

use bellkit_core::io::{parse_aligned_csv, write_aligned_csv};
use bellkit_core::{bell3_identity, chsh4_identity};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(runs) = parse_aligned_csv(text) else {
        return;
    };
    // anything that parses must satisfy the identity for its arity
    match runs.arity() {
        3 => assert!(bell3_identity(&runs).unwrap().satisfied),
        4 => assert!(chsh4_identity(&runs).unwrap().satisfied),
        _ => {}
    }
    let mut buf = Vec::new();
    write_aligned_csv(&runs, &mut buf).unwrap();
    let again = parse_aligned_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(again.arity(), runs.arity());
    for (a, b) in again.sets().iter().zip(runs.sets()) {
        assert_eq!(a.outcomes(), b.outcomes());
    }
});
