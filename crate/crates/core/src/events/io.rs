//! Event file formats.
//!
//! CSV: header `x,y,t,p`, one event per line, `t` in integer microseconds.
//! Packed binary: `EVT1` magic, little-endian `u16` width and height, then
//! 13-byte records of `(u16 x, u16 y, i64 t, i8 p)`.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Event, EventError, Polarity, SensorGeometry};

pub const BINARY_MAGIC: &[u8; 4] = b"EVT1";
const RECORD_LEN: usize = 13;
const HEADER_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventFormat {
    Csv,
    PackedBinary,
}

impl EventFormat {
    /// Guesses from the extension: `.csv` is CSV, anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EventFormat::Csv,
            _ => EventFormat::PackedBinary,
        }
    }
}

impl FromStr for EventFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "bin" | "binary" | "packed_binary" => Ok(EventFormat::PackedBinary),
            other => Err(format!("unknown event format `{other}`")),
        }
    }
}

/// How polarity is encoded on disk. Both map to {-1, +1} in memory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarityConvention {
    /// `-1` / `1`.
    #[default]
    Signed,
    /// `0` / `1`.
    ZeroOne,
}

impl PolarityConvention {
    fn decode(self, value: i64) -> Option<Polarity> {
        match (self, value) {
            (PolarityConvention::Signed, -1) | (PolarityConvention::ZeroOne, 0) => {
                Some(Polarity::Negative)
            }
            (_, 1) => Some(Polarity::Positive),
            _ => None,
        }
    }

    fn encode(self, p: Polarity) -> i8 {
        match (self, p) {
            (_, Polarity::Positive) => 1,
            (PolarityConvention::Signed, Polarity::Negative) => -1,
            (PolarityConvention::ZeroOne, Polarity::Negative) => 0,
        }
    }
}

impl fmt::Display for PolarityConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolarityConvention::Signed => "{-1,1}",
            PolarityConvention::ZeroOne => "{0,1}",
        })
    }
}

impl FromStr for PolarityConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signed" => Ok(PolarityConvention::Signed),
            "zero_one" | "zero-one" => Ok(PolarityConvention::ZeroOne),
            other => Err(format!("unknown polarity convention `{other}` (signed, zero_one)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    /// Required for CSV; binary files carry their own geometry.
    pub geometry: Option<SensorGeometry>,
    pub polarity: PolarityConvention,
}

/// Shared bounds/monotonicity checks applied by every reader.
#[derive(Debug)]
struct Validator {
    geometry: SensorGeometry,
    polarity: PolarityConvention,
    index: u64,
    prev_t: Option<i64>,
}

impl Validator {
    fn new(geometry: SensorGeometry, polarity: PolarityConvention) -> Self {
        Self {
            geometry,
            polarity,
            index: 0,
            prev_t: None,
        }
    }

    fn check(&mut self, x: i64, y: i64, t: i64, p: i64) -> Result<Event, EventError> {
        let index = self.index;
        self.index += 1;
        if !self.geometry.contains(x, y) {
            return Err(EventError::OutOfBounds {
                index,
                x,
                y,
                width: self.geometry.width,
                height: self.geometry.height,
            });
        }
        let p = self.polarity.decode(p).ok_or(EventError::Polarity {
            index,
            value: p,
            convention: self.polarity,
        })?;
        if let Some(prev) = self.prev_t {
            if t < prev {
                return Err(EventError::NonMonotonic { index, t, prev });
            }
        }
        self.prev_t = Some(t);
        Ok(Event::new(x as u16, y as u16, t, p))
    }
}

/// Lazy CSV event reader. Stops after the first error.
pub struct CsvEventReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    validator: Validator,
    failed: bool,
}

impl<R: Read> CsvEventReader<R> {
    pub fn new(
        reader: R,
        geometry: SensorGeometry,
        polarity: PolarityConvention,
    ) -> Result<Self, EventError> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = csv.headers().map_err(|e| csv_error(e, 1))?;
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "t", "p"] {
            return Err(EventError::Parse {
                line: 1,
                message: format!("expected header `x,y,t,p`, found `{}`", join(headers)),
            });
        }
        Ok(Self {
            records: csv.into_records(),
            validator: Validator::new(geometry, polarity),
            failed: false,
        })
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.validator.geometry
    }

    fn parse(&mut self, record: csv::StringRecord) -> Result<Event, EventError> {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(EventError::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<i64, EventError> {
            record[i].parse::<i64>().map_err(|_| EventError::Parse {
                line,
                message: format!("field `{name}` is not an integer: `{}`", &record[i]),
            })
        };
        let (x, y, t, p) = (field(0, "x")?, field(1, "y")?, field(2, "t")?, field(3, "p")?);
        self.validator.check(x, y, t, p)
    }
}

fn join(record: &csv::StringRecord) -> String {
    record.iter().collect::<Vec<_>>().join(",")
}

fn csv_error(e: csv::Error, fallback_line: u64) -> EventError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EventError::Io(io),
        kind => EventError::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

impl<R: Read> Iterator for CsvEventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = match self.records.next()? {
            Ok(record) => self.parse(record),
            Err(e) => Err(csv_error(e, 0)),
        };
        self.failed = item.is_err();
        Some(item)
    }
}

/// Lazy packed-binary event reader. Stops after the first error.
pub struct BinaryEventReader<R: Read> {
    reader: R,
    validator: Validator,
    offset: u64,
    failed: bool,
}

impl<R: Read> BinaryEventReader<R> {
    pub fn new(mut reader: R, polarity: PolarityConvention) -> Result<Self, EventError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_full(&mut reader, &mut header)?;
        if got < HEADER_LEN {
            return Err(EventError::Binary {
                offset: got as u64,
                message: "truncated header".into(),
            });
        }
        if &header[..4] != BINARY_MAGIC {
            return Err(EventError::Binary {
                offset: 0,
                message: "missing EVT1 magic".into(),
            });
        }
        let width = u16::from_le_bytes([header[4], header[5]]) as usize;
        let height = u16::from_le_bytes([header[6], header[7]]) as usize;
        let geometry = SensorGeometry::new(width, height).map_err(|_| EventError::Binary {
            offset: 4,
            message: format!("invalid geometry {width}x{height}"),
        })?;
        Ok(Self {
            reader,
            validator: Validator::new(geometry, polarity),
            offset: HEADER_LEN as u64,
            failed: false,
        })
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.validator.geometry
    }
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, EventError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

impl<R: Read> Iterator for BinaryEventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let mut rec = [0u8; RECORD_LEN];
        let item = match read_full(&mut self.reader, &mut rec) {
            Ok(0) => return None,
            Ok(n) if n < RECORD_LEN => Err(EventError::Binary {
                offset: self.offset,
                message: format!("truncated record ({n} of {RECORD_LEN} bytes)"),
            }),
            Ok(_) => {
                let x = u16::from_le_bytes([rec[0], rec[1]]) as i64;
                let y = u16::from_le_bytes([rec[2], rec[3]]) as i64;
                let t = i64::from_le_bytes(rec[4..12].try_into().expect("8 bytes"));
                let p = rec[12] as i8 as i64;
                self.offset += RECORD_LEN as u64;
                self.validator.check(x, y, t, p)
            }
            Err(e) => Err(e),
        };
        self.failed = item.is_err();
        Some(item)
    }
}

/// A validated event file opened for sequential reading.
pub enum EventStream {
    Csv(CsvEventReader<BufReader<File>>),
    Binary(BinaryEventReader<BufReader<File>>),
}

impl EventStream {
    pub fn geometry(&self) -> SensorGeometry {
        match self {
            EventStream::Csv(r) => r.geometry(),
            EventStream::Binary(r) => r.geometry(),
        }
    }
}

impl Iterator for EventStream {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            EventStream::Csv(r) => r.next(),
            EventStream::Binary(r) => r.next(),
        }
    }
}

/// Opens `path` for lazy reading. Every yielded event has been checked for
/// in-bounds coordinates, a legal polarity and non-decreasing time.
pub fn read_event_stream(
    path: impl AsRef<Path>,
    format: EventFormat,
    options: ReadOptions,
) -> Result<EventStream, EventError> {
    let file = BufReader::new(File::open(path)?);
    match format {
        EventFormat::Csv => {
            let geometry = options.geometry.ok_or(EventError::MissingGeometry)?;
            Ok(EventStream::Csv(CsvEventReader::new(
                file,
                geometry,
                options.polarity,
            )?))
        }
        EventFormat::PackedBinary => Ok(EventStream::Binary(BinaryEventReader::new(
            file,
            options.polarity,
        )?)),
    }
}

pub fn write_csv<W: Write>(
    mut writer: W,
    events: &[Event],
    polarity: PolarityConvention,
) -> std::io::Result<()> {
    writeln!(writer, "x,y,t,p")?;
    for e in events {
        writeln!(writer, "{},{},{},{}", e.x, e.y, e.t, polarity.encode(e.p))?;
    }
    writer.flush()
}

/// Records carry polarity in the file's convention, like the CSV writer.
pub fn write_binary<W: Write>(
    mut writer: W,
    geometry: SensorGeometry,
    events: &[Event],
    polarity: PolarityConvention,
) -> std::io::Result<()> {
    writer.write_all(BINARY_MAGIC)?;
    writer.write_all(&(geometry.width as u16).to_le_bytes())?;
    writer.write_all(&(geometry.height as u16).to_le_bytes())?;
    for e in events {
        let mut rec = [0u8; RECORD_LEN];
        rec[0..2].copy_from_slice(&e.x.to_le_bytes());
        rec[2..4].copy_from_slice(&e.y.to_le_bytes());
        rec[4..12].copy_from_slice(&e.t.to_le_bytes());
        rec[12] = polarity.encode(e.p) as u8;
        writer.write_all(&rec)?;
    }
    writer.flush()
}

pub fn write_event_file(
    path: impl AsRef<Path>,
    format: EventFormat,
    geometry: SensorGeometry,
    events: &[Event],
    polarity: PolarityConvention,
) -> std::io::Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        EventFormat::Csv => write_csv(out, events, polarity),
        EventFormat::PackedBinary => write_binary(out, geometry, events, polarity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(480, 360).unwrap()
    }

    fn read_csv(text: &str, polarity: PolarityConvention) -> Result<Vec<Event>, EventError> {
        CsvEventReader::new(text.as_bytes(), geom(), polarity)?.collect()
    }

    #[test]
    fn csv_field_mapping() {
        let events = read_csv("x,y,t,p\n10,20,1000,1\n", PolarityConvention::Signed).unwrap();
        assert_eq!(events, vec![Event::new(10, 20, 1000, Polarity::Positive)]);
    }

    #[test]
    fn csv_zero_one_polarity() {
        let events = read_csv("x,y,t,p\n10,20,1000,0\n", PolarityConvention::ZeroOne).unwrap();
        assert_eq!(events[0].p, Polarity::Negative);
        // 0 is not a legal signed polarity
        let err = read_csv("x,y,t,p\n10,20,1000,0\n", PolarityConvention::Signed).unwrap_err();
        assert!(matches!(err, EventError::Polarity { index: 0, value: 0, .. }));
        let err = read_csv("x,y,t,p\n1,1,1,-1\n", PolarityConvention::ZeroOne).unwrap_err();
        assert!(matches!(err, EventError::Polarity { value: -1, .. }));
    }

    #[test]
    fn csv_errors_carry_location() {
        let err = read_csv("x,y,t,p\n1,2,3,1\n1,2,x,1\n", PolarityConvention::Signed).unwrap_err();
        assert!(matches!(err, EventError::Parse { line: 3, .. }), "{err}");
        let err = read_csv("x,y,t,p\n1,2,3\n", PolarityConvention::Signed).unwrap_err();
        assert!(matches!(err, EventError::Parse { line: 2, .. }), "{err}");
        let err = read_csv("a,b,c,d\n", PolarityConvention::Signed).err().unwrap();
        assert!(matches!(err, EventError::Parse { line: 1, .. }));
    }

    #[test]
    fn csv_validation_errors() {
        let err = read_csv("x,y,t,p\n480,0,1,1\n", PolarityConvention::Signed).unwrap_err();
        assert!(matches!(err, EventError::OutOfBounds { index: 0, x: 480, .. }));
        let err =
            read_csv("x,y,t,p\n0,0,10,1\n0,0,10,1\n0,0,9,1\n", PolarityConvention::Signed)
                .unwrap_err();
        assert!(matches!(
            err,
            EventError::NonMonotonic {
                index: 2,
                t: 9,
                prev: 10
            }
        ));
    }

    #[test]
    fn reader_stops_after_first_error() {
        let mut r = CsvEventReader::new(
            "x,y,t,p\n0,0,5,1\n0,0,4,1\n0,0,6,1\n".as_bytes(),
            geom(),
            PolarityConvention::Signed,
        )
        .unwrap();
        assert!(r.next().unwrap().is_ok());
        assert!(r.next().unwrap().is_err());
        assert!(r.next().is_none());
    }

    #[test]
    fn binary_header_and_truncation() {
        let mut buf = Vec::new();
        let events = [Event::new(1, 2, 3, Polarity::Negative)];
        write_binary(&mut buf, geom(), &events, PolarityConvention::Signed).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + RECORD_LEN);
        let r = BinaryEventReader::new(buf.as_slice(), PolarityConvention::Signed).unwrap();
        assert_eq!(r.geometry(), geom());
        assert_eq!(r.collect::<Result<Vec<_>, _>>().unwrap(), events);

        let cut = &buf[..buf.len() - 1];
        let err = BinaryEventReader::new(cut, PolarityConvention::Signed)
            .unwrap()
            .collect::<Result<Vec<_>, _>>()
            .unwrap_err();
        assert!(matches!(err, EventError::Binary { offset: 8, .. }));

        assert!(BinaryEventReader::new(&b"EVT0\x01\0\x01\0"[..], PolarityConvention::Signed).is_err());
        assert!(BinaryEventReader::new(&b"EVT1\0\0\x01\0"[..], PolarityConvention::Signed).is_err());
        assert!(BinaryEventReader::new(&b"EVT1"[..], PolarityConvention::Signed).is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(EventFormat::from_path(Path::new("a/b.CSV")), EventFormat::Csv);
        assert_eq!(
            EventFormat::from_path(Path::new("a/b.evt")),
            EventFormat::PackedBinary
        );
    }
}
