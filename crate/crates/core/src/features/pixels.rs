//! Raw pixel grids and the tensorize-then-truncate image vectorization.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PIXEL_LENGTH: usize = 750;

/// An 8-bit image stored row-major with interleaved channels (`HWC`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl PixelGrid {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        let expected = height * width * channels;
        if expected == 0 || data.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "pixel grid",
                lhs: vec![height, width, channels],
                rhs: vec![data.len()],
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Scales bytes to `[0, 1]`, flattens channel-major (`CHW`), then keeps the
/// leading `length` values or zero-pads.
pub fn image_to_vector(pixels: &PixelGrid, length: usize) -> Vec<f64> {
    let (h, w, ch) = pixels.shape();
    let plane = h * w;
    let mut out = Vec::with_capacity(length);
    for i in 0..(plane * ch).min(length) {
        let (c, rest) = (i / plane, i % plane);
        let byte = pixels.data[rest * ch + c];
        out.push(f64::from(byte) / 255.0);
    }
    out.resize(length, 0.0);
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct ThumbnailRecord {
    portrait_ref: String,
    height: usize,
    width: usize,
    channels: usize,
    pixels_hex: String,
}

/// Portrait thumbnails keyed by `portrait_ref`, read from a line-delimited file of
/// `{portrait_ref, height, width, channels, pixels_hex}` records.
#[derive(Debug, Clone, Default)]
pub struct Thumbnails {
    grids: HashMap<String, PixelGrid>,
}

impl Thumbnails {
    pub fn insert(&mut self, portrait_ref: impl Into<String>, grid: PixelGrid) {
        self.grids.insert(portrait_ref.into(), grid);
    }

    pub fn get(&self, portrait_ref: &str) -> Option<&PixelGrid> {
        self.grids.get(portrait_ref)
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<thumbnails>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| Error::MalformedLine {
                line: i + 1,
                message,
            };
            let rec: ThumbnailRecord =
                serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            let data = hex::decode(&rec.pixels_hex).map_err(|e| malformed(e.to_string()))?;
            let grid = PixelGrid::new(rec.height, rec.width, rec.channels, data)
                .map_err(|e| malformed(e.to_string()))?;
            out.insert(rec.portrait_ref, grid);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn to_lines(&self) -> String {
        let mut keys: Vec<&String> = self.grids.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let g = &self.grids[k];
            let rec = ThumbnailRecord {
                portrait_ref: k.clone(),
                height: g.height,
                width: g.width,
                channels: g.channels,
                pixels_hex: hex::encode(&g.data),
            };
            out.push_str(&serde_json::to_string(&rec).expect("thumbnail record serializes"));
            out.push('\n');
        }
        out
    }
}
