#![no_main]
use libfuzzer_sys::fuzz_target;
use papyrodate::model::{parse_manifest, validate_manifest};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = parse_manifest(data) {
        // validation must never panic, whatever the manifest holds
        let _ = validate_manifest(&m);
    }
});
