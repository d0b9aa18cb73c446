//! Fuzz target for JSON run configurations.
//!
//! Run with: `cargo +nightly fuzz run parse_config`

#![no_main]

use dropqed::cli::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        match parse_config(text) {
            Ok(cfg) => {
                assert!(cfg.validate().is_ok());
                assert!(cfg.theta_over_pi.is_finite());
            }
            Err(e) => assert!(!e.to_line().contains('\n')),
        }
    }
});
