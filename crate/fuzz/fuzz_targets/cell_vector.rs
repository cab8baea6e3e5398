#![no_main]

use ctb::cells::CellVector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let n = 2 + n as usize % 19;
    if let Ok(v) = CellVector::parse(n, text) {
        assert_eq!(CellVector::parse(n, &v.to_string()).unwrap(), v);
        let _ = v.best_arm();
        let _ = v.index();
    }
});
