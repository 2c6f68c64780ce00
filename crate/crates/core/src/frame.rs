//! Grayscale frames, rectangular blocks and binary PGM I/O.
//!
//! Only 8-bit single-channel `P5` files are supported. Everything downstream
//! (coding, feature extraction, metrics) works on the luminance plane alone.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit luminance raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Right/bottom pads the frame to a multiple of `unit` by replicating the
    /// last column and row. Returns a clone when already aligned.
    pub fn pad_to_multiple(&self, unit: usize) -> Frame {
        let w = self.width.div_ceil(unit) * unit;
        let h = self.height.div_ceil(unit) * unit;
        if w == self.width && h == self.height {
            return self.clone();
        }
        let mut samples = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = self.row(y.min(self.height - 1));
            samples.extend_from_slice(row);
            let last = row[self.width - 1];
            samples.extend(std::iter::repeat(last).take(w - self.width));
        }
        Frame {
            width: w,
            height: h,
            samples,
        }
    }

    /// Top-left `width`×`height` window.
    pub fn crop(&self, width: usize, height: usize) -> Result<Frame> {
        Ok(extract_block(self, 0, 0, width, height)?.into_frame())
    }

    /// Copies `block` back into the frame at its recorded position.
    pub fn write_block(&mut self, block: &Block) -> Result<()> {
        check_rect(self, block.x, block.y, block.width, block.height)?;
        for (r, src) in block.samples.chunks_exact(block.width).enumerate() {
            let start = (block.y + r) * self.width + block.x;
            self.samples[start..start + block.width].copy_from_slice(src);
        }
        Ok(())
    }
}

/// A rectangular copy of frame samples, remembering where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl Block {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::at(0, 0, width, height, samples)
    }

    pub fn at(x: usize, y: usize, width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || samples.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} block",
                samples.len()
            )));
        }
        Ok(Block {
            x,
            y,
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Block {
            x: 0,
            y: 0,
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn at_xy(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn same_size(&self, other: &Block) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn into_frame(self) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            samples: self.samples,
        }
    }
}

impl From<&Frame> for Block {
    fn from(frame: &Frame) -> Self {
        Block {
            x: 0,
            y: 0,
            width: frame.width,
            height: frame.height,
            samples: frame.samples.clone(),
        }
    }
}

fn check_rect(frame: &Frame, x: usize, y: usize, w: usize, h: usize) -> Result<()> {
    let fits = w > 0
        && h > 0
        && x.checked_add(w).is_some_and(|r| r <= frame.width)
        && y.checked_add(h).is_some_and(|b| b <= frame.height);
    if fits {
        Ok(())
    } else {
        Err(Error::OutOfBounds {
            x,
            y,
            w,
            h,
            frame_w: frame.width,
            frame_h: frame.height,
        })
    }
}

pub fn extract_block(frame: &Frame, x: usize, y: usize, w: usize, h: usize) -> Result<Block> {
    check_rect(frame, x, y, w, h)?;
    let mut samples = Vec::with_capacity(w * h);
    for r in y..y + h {
        samples.extend_from_slice(&frame.row(r)[x..x + w]);
    }
    Ok(Block {
        x,
        y,
        width: w,
        height: h,
        samples,
    })
}

/// Zero-extends `block` to the right and bottom. The original samples keep
/// their top-left placement.
pub fn zero_pad_block(block: &Block, target_w: usize, target_h: usize) -> Result<Block> {
    if target_w < block.width || target_h < block.height {
        return Err(Error::PadTooSmall {
            w: block.width,
            h: block.height,
            target_w,
            target_h,
        });
    }
    let mut samples = vec![0u8; target_w * target_h];
    for (r, src) in block.samples.chunks_exact(block.width).enumerate() {
        samples[r * target_w..r * target_w + block.width].copy_from_slice(src);
    }
    Ok(Block {
        x: block.x,
        y: block.y,
        width: target_w,
        height: target_h,
        samples,
    })
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&data)
}

pub fn save_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(frame))
        .map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.samples);
    out
}

pub fn parse_pgm(data: &[u8]) -> Result<Frame> {
    let mut cursor = HeaderCursor { data, pos: 0 };
    let magic = cursor.token()?;
    if magic != b"P5" {
        return Err(Error::MalformedHeader(format!(
            "expected magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates maxval from the raster
    match data.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let expected = width as usize * height as usize;
    let payload = &data[cursor.pos..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    Frame::new(
        width as usize,
        height as usize,
        payload[..expected].to_vec(),
    )
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .data
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader("unexpected end of header".into()));
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "bad {what} field {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}
