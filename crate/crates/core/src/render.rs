//! PNG output for surfaces and decay maps.
//!
//! Surfaces in `[-1, 1]` map to 8-bit gray with -1 at 0, 0 at 128 and +1 at
//! 255. Decay maps use a 256-entry colormap interpolated linearly between
//! these anchors (position, RGB):
//!
//! | position | colour          |
//! |----------|-----------------|
//! | 0.00     | (0, 0, 4)       |
//! | 0.25     | (87, 16, 110)   |
//! | 0.50     | (188, 55, 84)   |
//! | 0.75     | (249, 142, 9)   |
//! | 1.00     | (252, 255, 164) |
//!
//! Entry `i` sits at position `i / 255`; a decay value `d` uses entry
//! `round(255 * clamp(d, 0, 1))`.

use std::io::Cursor;
use std::sync::OnceLock;

use thiserror::Error;

use crate::grid::{Grid, Rect};
use crate::surfaces::DecayMap;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout: {0}")]
    Layout(String),
}

pub const COLORMAP_ANCHORS: [(f64, [u8; 3]); 5] = [
    (0.0, [0, 0, 4]),
    (0.25, [87, 16, 110]),
    (0.5, [188, 55, 84]),
    (0.75, [249, 142, 9]),
    (1.0, [252, 255, 164]),
];

/// Colour used for patch boundaries drawn over heatmaps.
pub const GRID_LINE: [u8; 3] = [0, 255, 255];

/// Gray level of a surface value. Negative values scale by 128 and positive
/// ones by 127 so both ends land exactly on 0 and 255. NaN renders as 128.
#[inline]
pub fn gray_level(v: f64) -> u8 {
    if v.is_nan() {
        return 128;
    }
    let v = v.clamp(-1.0, 1.0);
    let g = if v < 0.0 { 128.0 + 128.0 * v } else { 128.0 + 127.0 * v };
    g.round() as u8
}

pub fn surface_to_gray(frame: &Grid<f32>) -> Grid<u8> {
    frame.map(|&v| gray_level(v as f64))
}

pub fn colormap() -> &'static [[u8; 3]; 256] {
    static LUT: OnceLock<[[u8; 3]; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [[0u8; 3]; 256];
        for (i, entry) in lut.iter_mut().enumerate() {
            let pos = i as f64 / 255.0;
            let seg = COLORMAP_ANCHORS
                .windows(2)
                .find(|w| pos <= w[1].0)
                .expect("anchors cover [0, 1]");
            let (p0, c0) = seg[0];
            let (p1, c1) = seg[1];
            let t = (pos - p0) / (p1 - p0);
            for k in 0..3 {
                let v = c0[k] as f64 + t * (c1[k] as f64 - c0[k] as f64);
                entry[k] = v.round() as u8;
            }
        }
        lut
    })
}

#[inline]
pub fn decay_color(d: f64) -> [u8; 3] {
    let d = if d.is_nan() { 0.0 } else { d.clamp(0.0, 1.0) };
    colormap()[(d * 255.0).round() as usize]
}

/// Interleaved 8-bit RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&c);
    }
}

pub fn decay_heatmap(map: &DecayMap) -> RgbImage {
    let (width, height) = map.values.shape();
    let data = map.values.as_slice().iter().flat_map(|&d| decay_color(d)).collect();
    RgbImage { width, height, data }
}

/// Outlines each rectangle with one-pixel lines.
pub fn draw_grid(img: &mut RgbImage, rects: impl IntoIterator<Item = Rect>) {
    for r in rects {
        if r.width() == 0 || r.height() == 0 {
            continue;
        }
        let (x1, y1) = ((r.x1 - 1).min(img.width - 1), (r.y1 - 1).min(img.height - 1));
        for x in r.x0..=x1 {
            img.put(x, r.y0, GRID_LINE);
            img.put(x, y1, GRID_LINE);
        }
        for y in r.y0..=y1 {
            img.put(r.x0, y, GRID_LINE);
            img.put(x1, y, GRID_LINE);
        }
    }
}

fn encode(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(data)?;
        w.finish()?;
    }
    Ok(out)
}

pub fn encode_gray_png(img: &Grid<u8>) -> Result<Vec<u8>, RenderError> {
    encode(img.width(), img.height(), png::ColorType::Grayscale, img.as_slice())
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    encode(img.width, img.height, png::ColorType::Rgb, &img.data)
}

/// Decoded 8-bit PNG: `channels` is 1 for gray, 3 for RGB.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedPng {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn decode_png(bytes: &[u8]) -> Result<DecodedPng, RenderError> {
    let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RenderError::Layout("image too large".into()))?;
    let mut data = vec![0; size];
    let info = reader.next_frame(&mut data)?;
    let channels = match (info.color_type, info.bit_depth) {
        (png::ColorType::Grayscale, png::BitDepth::Eight) => 1,
        (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
        other => return Err(RenderError::Layout(format!("{other:?}"))),
    };
    data.truncate(info.buffer_size());
    Ok(DecodedPng {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::SensorGeometry;

    #[test]
    fn gray_mapping_anchors() {
        assert_eq!(gray_level(-1.0), 0);
        assert_eq!(gray_level(0.0), 128);
        assert_eq!(gray_level(1.0), 255);
        assert_eq!(gray_level(0.5), 192);
        assert_eq!(gray_level(-0.5), 64);
        assert_eq!(gray_level(f64::NAN), 128);
        assert_eq!(gray_level(7.0), 255);
    }

    #[test]
    fn gray_is_monotone() {
        let levels: Vec<u8> = (-200..=200).map(|i| gray_level(i as f64 / 200.0)).collect();
        assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn colormap_hits_anchors() {
        let lut = colormap();
        assert_eq!(lut[0], [0, 0, 4]);
        assert_eq!(lut[255], [252, 255, 164]);
        assert_eq!(decay_color(1.0), [252, 255, 164]);
        assert_eq!(decay_color(-3.0), [0, 0, 4]);
    }

    #[test]
    fn zero_surface_is_mid_gray_png() {
        let png = encode_gray_png(&surface_to_gray(&Grid::new(7, 5))).unwrap();
        let d = decode_png(&png).unwrap();
        assert_eq!((d.width, d.height, d.channels), (7, 5, 1));
        assert!(d.data.iter().all(|&g| g == 128));
    }

    #[test]
    fn unit_decay_is_top_of_colormap() {
        let g = SensorGeometry::new(6, 4).unwrap();
        let png = encode_rgb_png(&decay_heatmap(&DecayMap::constant(g, 1.0))).unwrap();
        let d = decode_png(&png).unwrap();
        assert_eq!(d.channels, 3);
        assert!(d.data.chunks(3).all(|c| c == [252, 255, 164]));
    }

    #[test]
    fn grid_outlines_stay_inside() {
        let g = SensorGeometry::new(10, 6).unwrap();
        let mut img = decay_heatmap(&DecayMap::constant(g, 0.0));
        draw_grid(&mut img, [Rect::new(0, 0, 5, 6), Rect::new(5, 0, 10, 6)]);
        assert_eq!(img.pixel(0, 0), GRID_LINE);
        assert_eq!(img.pixel(4, 3), GRID_LINE);
        assert_eq!(img.pixel(9, 5), GRID_LINE);
        assert_eq!(img.pixel(2, 2), [0, 0, 4]);
    }
}
