#![no_main]

use lads::manifest::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_json(text) {
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    }
});
