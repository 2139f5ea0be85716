#![no_main]

use lads::render::decode_png;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(png) = decode_png(data) {
        assert_eq!(png.data.len(), png.width * png.height * png.channels);
    }
});
