//! Binary PNM (P5 gray, P6 RGB) images with maxval 255.

use crate::error::{Error, Result};

/// Row-major, channel-interleaved 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

// Caps header fields so a hostile header cannot request a huge allocation.
const MAX_DIMENSION: usize = 1 << 16;

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Image(format!("unsupported channel count {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Image(format!(
                "pixel buffer has {} bytes, expected {}",
                pixels.len(),
                width * height * channels
            )));
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.pixels[(row * self.width + col) * self.channels + ch]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: u8) {
        self.pixels[(row * self.width + col) * self.channels + ch] = v;
    }

    /// One channel as a separate single-channel image.
    pub fn channel(&self, ch: usize) -> Result<ImageBuffer> {
        self.check_channel(ch)?;
        let px = self.pixels.iter().skip(ch).step_by(self.channels).copied().collect();
        ImageBuffer::new(self.width, self.height, 1, px)
    }

    pub fn check_channel(&self, ch: usize) -> Result<()> {
        if ch >= self.channels {
            Err(Error::Image(format!("channel {ch} out of range for {}-channel image", self.channels)))
        } else {
            Ok(())
        }
    }

    /// Swaps rows and columns.
    pub fn transpose(&self) -> ImageBuffer {
        let mut out = vec![0; self.pixels.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                for ch in 0..self.channels {
                    out[(c * self.height + r) * self.channels + ch] = self.get(r, c, ch);
                }
            }
        }
        ImageBuffer { width: self.height, height: self.width, channels: self.channels, pixels: out }
    }
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
            if self.pos - start > 6 {
                return Err(Error::Pnm(format!("{what} field too long")));
            }
        }
        if start == self.pos {
            return Err(Error::Pnm(format!("missing {what}")));
        }
        let s = std::str::from_utf8(&self.data[start..self.pos]).expect("ascii digits");
        s.parse().map_err(|_| Error::Pnm(format!("bad {what}")))
    }
}

pub fn read_pnm(bytes: &[u8]) -> Result<ImageBuffer> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::Pnm("bad magic, expected P5 or P6".into())),
    };
    let mut h = Header { data: bytes, pos: 2 };
    if !h.data.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::Pnm("bad magic, expected P5 or P6".into()));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(Error::Pnm(format!("unsupported dimensions {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::Pnm(format!("maxval {maxval} unsupported, only 255")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(Error::Pnm("missing whitespace after maxval".into())),
    }
    let need = width * height * channels;
    let raster = &bytes[h.pos..];
    if raster.len() < need {
        return Err(Error::Pnm(format!("truncated raster: {} of {need} bytes", raster.len())));
    }
    ImageBuffer::new(width, height, channels, raster[..need].to_vec())
}

pub fn write_pnm(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
