#![no_main]

use ctb::record::{format_instance_record, parse_instance_record};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_instance_record(text) {
        let again = parse_instance_record(&format_instance_record(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
    }
});
