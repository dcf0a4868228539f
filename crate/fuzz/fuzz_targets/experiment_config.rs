#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = papyrodate::harness::parse_experiment_config(data);
});
