#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = papyrodate::io::parse_truths(data) {
        assert!(t.values().all(|y| *y != 0));
    }
});
