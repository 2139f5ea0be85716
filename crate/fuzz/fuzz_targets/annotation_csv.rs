#![no_main]

use lads::annotations::{filter_annotations, read_csv};
use lads::events::Frequency;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = read_csv(data) {
        let _ = filter_annotations(&samples, Frequency::hz(240));
    }
});
