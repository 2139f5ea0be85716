#![no_main]

use lads::events::Frequency;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = text.parse::<Frequency>() {
        assert!(f.as_f64() > 0.0);
        assert_eq!(f.to_string().parse::<Frequency>().unwrap(), f);
    }
});
