#![no_main]

use dropqed::cli::{parse_f64_list, parse_usize_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(v) = parse_usize_list(data) {
        assert_eq!(v.len(), data.split(',').count());
    }
    if let Ok(v) = parse_f64_list(data) {
        assert!(v.iter().all(|x| x.is_finite()));
    }
});
