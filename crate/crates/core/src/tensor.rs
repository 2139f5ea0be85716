//! Frame tensor files: `SRF1` magic, `u16` width, `u16` height, `u32` frame
//! count, `f32` clip bound, then frames of row-major little-endian `f32`.

use std::io::{self, Read, Seek, SeekFrom, Write};

use thiserror::Error;

use crate::grid::Grid;

pub const TENSOR_MAGIC: &[u8; 4] = b"SRF1";
pub const TENSOR_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("not a tensor file (bad magic)")]
    Magic,
    #[error("truncated tensor: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing {0} bytes after the last frame")]
    Trailing(u64),
    #[error("frame is {found:?}, file holds {expected:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("dimensions {width}x{height} do not fit the header")]
    Dimensions { width: usize, height: usize },
    #[error("too many frames for a u32 count")]
    TooManyFrames,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorHeader {
    pub width: u16,
    pub height: u16,
    pub frames: u32,
    pub clip: f32,
}

impl TensorHeader {
    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    fn to_bytes(self) -> [u8; TENSOR_HEADER_LEN] {
        let mut b = [0u8; TENSOR_HEADER_LEN];
        b[..4].copy_from_slice(TENSOR_MAGIC);
        b[4..6].copy_from_slice(&self.width.to_le_bytes());
        b[6..8].copy_from_slice(&self.height.to_le_bytes());
        b[8..12].copy_from_slice(&self.frames.to_le_bytes());
        b[12..16].copy_from_slice(&self.clip.to_le_bytes());
        b
    }

    fn parse(b: &[u8]) -> Result<Self, TensorError> {
        if b.len() < TENSOR_HEADER_LEN {
            if b.len() >= 4 && &b[..4] != TENSOR_MAGIC {
                return Err(TensorError::Magic);
            }
            return Err(TensorError::Truncated {
                expected: TENSOR_HEADER_LEN as u64,
                found: b.len() as u64,
            });
        }
        if &b[..4] != TENSOR_MAGIC {
            return Err(TensorError::Magic);
        }
        Ok(Self {
            width: u16::from_le_bytes([b[4], b[5]]),
            height: u16::from_le_bytes([b[6], b[7]]),
            frames: u32::from_le_bytes([b[8], b[9], b[10], b[11]]),
            clip: f32::from_le_bytes([b[12], b[13], b[14], b[15]]),
        })
    }
}

/// Streams frames to a seekable sink and fixes up the frame count on finish.
pub struct TensorWriter<W: Write + Seek> {
    sink: W,
    header: TensorHeader,
    buf: Vec<u8>,
}

impl<W: Write + Seek> TensorWriter<W> {
    pub fn new(mut sink: W, width: usize, height: usize, clip: f32) -> Result<Self, TensorError> {
        let (Ok(w @ 1..), Ok(h @ 1..)) = (u16::try_from(width), u16::try_from(height)) else {
            return Err(TensorError::Dimensions { width, height });
        };
        let header = TensorHeader {
            width: w,
            height: h,
            frames: 0,
            clip,
        };
        sink.write_all(&header.to_bytes())?;
        Ok(Self {
            sink,
            header,
            buf: Vec::with_capacity(width * height * 4),
        })
    }

    pub fn push(&mut self, frame: &Grid<f32>) -> Result<(), TensorError> {
        let expected = (self.header.width as usize, self.header.height as usize);
        if frame.shape() != expected {
            return Err(TensorError::Shape {
                expected,
                found: frame.shape(),
            });
        }
        self.header.frames = self.header.frames.checked_add(1).ok_or(TensorError::TooManyFrames)?;
        self.buf.clear();
        for v in frame.as_slice() {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.sink.write_all(&self.buf)?;
        Ok(())
    }

    pub fn frames(&self) -> u32 {
        self.header.frames
    }

    pub fn finish(mut self) -> Result<W, TensorError> {
        let end = self.sink.stream_position()?;
        self.sink.seek(SeekFrom::Start(0))?;
        self.sink.write_all(&self.header.to_bytes())?;
        self.sink.seek(SeekFrom::Start(end))?;
        self.sink.flush()?;
        Ok(self.sink)
    }
}

/// A fully loaded tensor file.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub header: TensorHeader,
    pub frames: Vec<Grid<f32>>,
}

impl Tensor {
    /// Parses a complete tensor, rejecting truncation and trailing bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TensorError> {
        let header = TensorHeader::parse(bytes)?;
        if header.frame_len() == 0 {
            return Err(TensorError::Dimensions {
                width: header.width as usize,
                height: header.height as usize,
            });
        }
        let frame_bytes = header.frame_len() as u64 * 4;
        let expected = TENSOR_HEADER_LEN as u64 + frame_bytes * header.frames as u64;
        let found = bytes.len() as u64;
        if found < expected {
            return Err(TensorError::Truncated { expected, found });
        }
        if found > expected {
            return Err(TensorError::Trailing(found - expected));
        }
        let (w, h) = (header.width as usize, header.height as usize);
        let body = &bytes[TENSOR_HEADER_LEN..];
        let frames = body
            .chunks_exact(frame_bytes as usize)
            .map(|chunk| {
                let data = chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect();
                Grid::from_vec(w, h, data).expect("chunk length matches frame")
            })
            .collect();
        Ok(Self { header, frames })
    }

    pub fn read(mut reader: impl Read) -> Result<Self, TensorError> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + self.frames.len() * self.header.frame_len() * 4);
        out.extend_from_slice(&self.header.to_bytes());
        for f in &self.frames {
            for v in f.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}
