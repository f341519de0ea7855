#![no_main]

use libfuzzer_sys::fuzz_target;
use windcone::expr::FieldExpr;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(e) = FieldExpr::parse(src) {
        for (x, y) in [(0.0, 0.0), (1.5, -2.0), (-1e3, 1e-3)] {
            let _ = e.eval(x, y);
        }
    }
});
