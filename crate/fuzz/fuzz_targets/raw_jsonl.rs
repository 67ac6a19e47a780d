#![no_main]

use assess_core::rawlog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match rawlog::parse(text) {
        // scoring a parsed log may fail, but never panics
        Ok(trials) => {
            for t in trials {
                let _ = t.record.score();
            }
        }
        Err(e) => assert!(e.line >= 1),
    }
});
