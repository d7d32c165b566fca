use std::path::Path;

use super::{read_file, write_file, FormatError};
use crate::error::{Error, Result};

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FormatError> {
        if pixels.len() != 3 * width * height {
            return Err(FormatError::InvalidShape(format!(
                "{width}x{height} image needs {} bytes, got {}",
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(RgbImage { width, height, pixels })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        RgbImage {
            width,
            height,
            pixels: rgb.iter().copied().cycle().take(3 * width * height).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the `w × h` window whose top-left corner is `(x0, y0)`.
    pub fn sub_image(&self, x0: usize, y0: usize, w: usize, h: usize) -> RgbImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "window out of bounds");
        let mut pixels = Vec::with_capacity(3 * w * h);
        for y in y0..y0 + h {
            let start = 3 * (y * self.width + x0);
            pixels.extend_from_slice(&self.pixels[start..start + 3 * w]);
        }
        RgbImage { width: w, height: h, pixels }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decodes a binary PPM (`P6`, maxval 255). Header comments are accepted.
    pub fn from_ppm(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < 2 || &bytes[..2] != b"P6" {
            let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
            return Err(FormatError::UnsupportedImage(format!("magic {found:?}, only P6 is supported")));
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for field in &mut fields {
            skip_whitespace_and_comments(bytes, &mut pos);
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(FormatError::UnsupportedImage(format!("malformed header at offset {start}")));
            }
            *field = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FormatError::UnsupportedImage(format!("header value too large at offset {start}")))?;
        }
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(FormatError::UnsupportedImage(format!("maxval {maxval}, only 255 is supported")));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(FormatError::UnsupportedImage(format!("missing raster separator at offset {pos}")));
        }
        pos += 1;
        let needed = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| FormatError::UnsupportedImage(format!("{width}x{height} too large")))?;
        let found = bytes.len() - pos;
        if found < needed {
            return Err(FormatError::TruncatedPixels {
                offset: pos as u64,
                needed: needed as u64,
                found: found as u64,
            });
        }
        Ok(RgbImage {
            width,
            height,
            pixels: bytes[pos..pos + needed].to_vec(),
        })
    }
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    RgbImage::from_ppm(&bytes).map_err(|e| Error::format(path, e))
}

pub fn write_image(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &image.to_ppm())
}
