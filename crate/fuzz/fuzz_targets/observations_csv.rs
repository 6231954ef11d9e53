#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(obs) = dool_core::inverse::parse_observations_csv(text, "fuzz.csv") {
            let again = dool_core::inverse::parse_observations_csv(&obs.to_csv(), "again.csv").expect("round trip");
            assert_eq!(again.times.len(), obs.times.len());
        }
    }
});
