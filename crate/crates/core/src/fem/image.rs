use std::path::Path;

use super::{NodalField, TriMesh};
use crate::{Error, Result};

/// Grayscale raster, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image must be nonempty".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[col + row * self.width]
    }

    /// Parses a binary (P5) or ASCII (P2) PGM with `maxval ≤ 65535`.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut cursor = PgmCursor { bytes, pos: 0 };
        let magic = cursor.token()?;
        let binary = match magic.as_str() {
            "P2" => false,
            "P5" => true,
            other => return Err(Error::Parse(format!("unsupported PGM magic {other:?}"))),
        };
        let width = cursor.number()?;
        let height = cursor.number()?;
        let maxval = cursor.number()?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("PGM maxval {maxval} outside 1..=65535")));
        }
        let count = width * height;
        let mut pixels = Vec::with_capacity(count);
        if binary {
            // Exactly one whitespace byte separates the header from the raster.
            cursor.pos += 1;
            let bytes_per = if maxval < 256 { 1 } else { 2 };
            let raster = bytes
                .get(cursor.pos..cursor.pos + count * bytes_per)
                .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
            for chunk in raster.chunks_exact(bytes_per) {
                let v = if bytes_per == 1 {
                    chunk[0] as usize
                } else {
                    u16::from_be_bytes([chunk[0], chunk[1]]) as usize
                };
                pixels.push(v as f64);
            }
        } else {
            for _ in 0..count {
                pixels.push(cursor.number()? as f64);
            }
        }
        if pixels.iter().any(|&p| p > maxval as f64) {
            return Err(Error::Parse("PGM sample exceeds maxval".into()));
        }
        GrayImage::new(width, height, pixels)
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_pgm(&bytes).map_err(|e| e.context(path.display().to_string()))
    }

    /// ASCII PGM with the pixel range `[min, max]` mapped linearly onto
    /// `[0, 255]` (a constant image maps to 0).
    pub fn to_pgm_ascii(&self) -> String {
        let (lo, hi) = min_max(&self.pixels);
        let span = hi - lo;
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|&p| {
                    let level = if span > 0.0 { ((p - lo) / span * 255.0).round() } else { 0.0 };
                    (level.clamp(0.0, 255.0) as u8).to_string()
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Bilinear interpolation with sample `(col, row)` placed at
    /// `(col·Lx/(w−1), Ly − row·Ly/(h−1))`, so the raster spans the domain.
    pub fn sample(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        let u = axis_coordinate(x / lx, self.width);
        let v = axis_coordinate(1.0 - y / ly, self.height);
        let (c0, fc) = split(u, self.width);
        let (r0, fr) = split(v, self.height);
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let top = (1.0 - fc) * self.get(c0, r0) + fc * self.get(c1, r0);
        let bottom = (1.0 - fc) * self.get(c0, r1) + fc * self.get(c1, r1);
        (1.0 - fr) * top + fr * bottom
    }
}

fn axis_coordinate(t: f64, n: usize) -> f64 {
    t.clamp(0.0, 1.0) * (n - 1) as f64
}

fn split(u: f64, n: usize) -> (usize, f64) {
    let i = (u.floor() as usize).min(n.saturating_sub(2));
    (i, u - i as f64)
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
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

    fn token(&mut self) -> Result<String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("unexpected end of PGM data".into()));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::Parse(format!("invalid PGM number {t:?}")))
    }
}

/// Nodal field obtained by bilinearly sampling `image` over the domain and
/// rescaling affinely so the image minimum maps to `low` and its maximum to
/// `high`. A constant image yields the constant field `low`.
pub fn interpolate_image<'m>(mesh: &'m TriMesh, image: &GrayImage, low: f64, high: f64) -> Result<NodalField<'m>> {
    if !(low < high) {
        return Err(Error::InvalidArgument(format!("need low < high, got [{low}, {high}]")));
    }
    let (lo, hi) = min_max(image.pixels());
    let values = mesh
        .vertices()
        .iter()
        .map(|&[x, y]| {
            if hi > lo {
                let s = image.sample(x, y, mesh.lx(), mesh.ly());
                (low + (s - lo) / (hi - lo) * (high - low)).clamp(low, high)
            } else {
                low
            }
        })
        .collect();
    NodalField::new(mesh, values)
}
