#![no_main]

use std::io::Cursor;

use lads::events::{write_binary, BinaryEventReader, PolarityConvention};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let polarity = PolarityConvention::Signed;
    let Ok(reader) = BinaryEventReader::new(Cursor::new(data), polarity) else {
        return;
    };
    let g = reader.geometry();
    let events: Result<Vec<_>, _> = reader.collect();
    let Ok(events) = events else { return };
    // Whatever decodes cleanly must survive a write and re-read.
    let mut buf = Vec::new();
    write_binary(&mut buf, g, &events, polarity).unwrap();
    let again: Vec<_> = BinaryEventReader::new(Cursor::new(&buf), polarity)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(again, events);
});
