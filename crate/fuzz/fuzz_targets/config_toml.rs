#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = dool_core::config::ExperimentConfig::from_toml(text) {
            let back = dool_core::config::ExperimentConfig::from_toml(&cfg.to_toml()).expect("round trip");
            assert_eq!(back, cfg);
        }
    }
});
