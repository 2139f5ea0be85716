#![no_main]

use lads::metrics::{group_by_image, landmark_nme, map50, read_jsonl, DetectionRecord, LandmarkRecord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_jsonl::<DetectionRecord>(data) {
        let (dets, gts) = group_by_image(&records, &records);
        let ap = map50(&dets, &gts);
        assert!((0.0..=1.0).contains(&ap));
    }
    if let Ok(records) = read_jsonl::<LandmarkRecord>(data) {
        let _ = landmark_nme(&records, &records);
    }
});
