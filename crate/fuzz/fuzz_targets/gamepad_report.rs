#![no_main]

use assess_service::{normalize_gamepad, InputReport};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = serde_json::from_slice::<InputReport>(data) else { return };
    for deadzone in [0.0, 0.1, 0.5] {
        if let Ok((ux, uy)) = normalize_gamepad(&report, deadzone) {
            assert!(ux.is_finite() && uy.is_finite());
            assert!(ux.hypot(uy) <= 1.0 + 1e-9);
            assert!(ux == 0.0 && uy == 0.0 || ux.hypot(uy) >= deadzone);
        }
    }
});
