#![no_main]

use dool_core::basis::BasisSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ic) = dool_core::config::InitialCondition::parse(text) {
            for b in [
                BasisSpec::fourier_1d(1.0, 2, 16),
                BasisSpec::fourier_2d(std::f64::consts::PI, 1, 8),
                BasisSpec::hermite(5.0, 5, 32),
            ] {
                let _ = ic.values(&b);
            }
        }
    }
});
