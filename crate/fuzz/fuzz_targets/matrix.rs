#![no_main]

use ctb::record::{format_matrix, parse_matrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix(text) {
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }
});
