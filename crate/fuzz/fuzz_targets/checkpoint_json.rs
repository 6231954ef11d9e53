#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ck) = dool_core::pipeline::Checkpoint::from_json(text) {
            let back = dool_core::pipeline::Checkpoint::from_json(&ck.to_json()).expect("round trip");
            assert_eq!(back, ck);
        }
    }
});
