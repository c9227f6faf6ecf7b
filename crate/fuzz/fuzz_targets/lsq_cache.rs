#![no_main]

//! Least-squares cache decoding. Corrupt or truncated caches must be
//! rejected with an error; accepted ones re-encode to the same bytes.

use libfuzzer_sys::fuzz_target;
use tetfv::lsq::LsqOperator;

fuzz_target!(|data: &[u8]| {
    if let Ok(op) = LsqOperator::from_bytes(data) {
        assert_eq!(op.to_bytes(), data);
    }
});
