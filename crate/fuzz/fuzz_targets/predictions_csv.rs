#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = papyrodate::io::parse_predictions(data) {
        assert!(rows.iter().all(|r| r.pred.value().is_finite()));
    }
});
