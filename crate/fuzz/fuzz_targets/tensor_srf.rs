#![no_main]

use lads::tensor::Tensor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = Tensor::from_bytes(data) {
        assert_eq!(t.to_bytes(), data);
    }
});
