#![no_main]

use lads::config::{Dataset, Method, RepresentationConfig};
use lads::events::SensorGeometry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut cfg = RepresentationConfig::from_preset(Method::LadsFft, Dataset::Fes, 30.0);
    if cfg.apply_overrides(text).is_ok() {
        let _ = cfg.validate_for(SensorGeometry::vga_480x360());
        let _ = cfg.canonical_query();
    }
});
