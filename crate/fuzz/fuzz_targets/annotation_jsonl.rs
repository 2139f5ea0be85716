#![no_main]

use lads::annotations::{filter_annotations, read_jsonl};
use lads::events::Frequency;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = read_jsonl(data) {
        if let Ok(report) = filter_annotations(&samples, Frequency::hz(30)) {
            assert_eq!(report.samples.len(), samples.len());
        }
    }
});
