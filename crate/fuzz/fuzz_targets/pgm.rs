#![no_main]
use libfuzzer_sys::fuzz_target;
use papyrodate::io::{encode_pgm, parse_pgm};
use papyrodate::predictors::{extract_features, FEATURE_DIMS};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = parse_pgm(data) {
        assert_eq!(parse_pgm(&encode_pgm(&img)).as_ref(), Ok(&img));
        assert_eq!(extract_features(&img).len(), FEATURE_DIMS);
    }
});
