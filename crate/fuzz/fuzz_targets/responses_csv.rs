#![no_main]
use libfuzzer_sys::fuzz_target;
use papyrodate::agreement::ResponseSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = papyrodate::io::parse_responses(data) {
        let _ = ResponseSet::new(rows);
    }
});
