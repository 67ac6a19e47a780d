#![no_main]

use assess_core::{build_schedule, TrialConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = TrialConfig::from_json(text) else { return };
    // a validated config serializes back to an equal, still valid config
    let json = serde_json::to_string(&config).expect("config serializes");
    assert_eq!(TrialConfig::from_json(&json).expect("round trip"), config);
    if config.repeats_per_target <= 50 {
        let _ = build_schedule(&config);
    }
});
