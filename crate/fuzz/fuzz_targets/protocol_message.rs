#![no_main]

use assess_service::{parse_client, ClientMessage};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // any accepted message survives a round trip unchanged
    if let Ok(msg) = parse_client(text) {
        let again: ClientMessage = parse_client(&msg.to_json()).expect("re-encoded message parses");
        assert_eq!(again, msg);
    }
});
