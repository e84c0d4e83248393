//! Dense H x W x C feature maps and the `FMAP` binary container.
//!
//! Layout on disk: the ASCII magic `FMAP`, then `H`, `W`, `C` as little-endian
//! `u32`, then `H * W * C` little-endian `f32` values, row-major and
//! channel-minor.

use std::io::{self, Read, Write};

use crate::error::{GeomError, Result};

pub const FMAP_MAGIC: [u8; 4] = *b"FMAP";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| GeomError::InvalidInput("feature map size overflows".into()))?;
        if data.len() != expected {
            return Err(GeomError::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::InvalidInput("feature map has non-finite values".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Builds a map from `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Smallest and largest sample, or `None` for an empty map.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.data.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub fn read_fmap<R: Read>(mut reader: R) -> io::Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if magic != FMAP_MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad FMAP magic"));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            reader.read_exact(&mut b)?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let [h, w, c] = dims;
        let count = h
            .checked_mul(w)
            .and_then(|n| n.checked_mul(c))
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "FMAP size overflows"))?;
        let mut raw = vec![0u8; count * 4];
        reader.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Self::new(h, w, c, data)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
    }

    /// Writes the map, narrowing samples to `f32`.
    pub fn write_fmap<W: Write>(&self, mut writer: W) -> io::Result<()> {
        let to_u32 = |v: usize| {
            u32::try_from(v)
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))
        };
        let mut buf = Vec::with_capacity(16 + 4 * self.data.len());
        buf.extend_from_slice(&FMAP_MAGIC);
        for d in [self.height, self.width, self.channels] {
            buf.extend_from_slice(&to_u32(d)?.to_le_bytes());
        }
        for &v in &self.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        writer.write_all(&buf)
    }
}
