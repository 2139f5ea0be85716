#![no_main]

use std::io::Cursor;

use lads::events::{CsvEventReader, PolarityConvention, SensorGeometry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let g = SensorGeometry::new(64, 48).unwrap();
    for polarity in [PolarityConvention::Signed, PolarityConvention::ZeroOne] {
        let Ok(reader) = CsvEventReader::new(Cursor::new(data), g, polarity) else {
            continue;
        };
        let mut prev = i64::MIN;
        for e in reader {
            let Ok(e) = e else { break };
            assert!((e.x as usize) < g.width && (e.y as usize) < g.height);
            assert!(e.t >= prev);
            prev = e.t;
        }
    }
});
