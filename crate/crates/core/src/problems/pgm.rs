//! Grayscale images and PGM (P2 ASCII, P5 binary) I/O. Pixel values are mapped linearly
//! between `0..=maxval` and `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels.
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Image { rows, cols, data })
    }

    pub fn constant(rows: usize, cols: usize, v: f64) -> Self {
        Image { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Checkerboard of 8-pixel tiles plus a horizontal ramp, values in `[0.125, 0.875]`.
    pub fn synthetic(rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        let denom = (cols.max(2) - 1) as f64;
        for i in 0..rows {
            for j in 0..cols {
                let tile = if ((i / 8) + (j / 8)) % 2 == 0 { 0.25 } else { 0.75 };
                data.push(0.5 * tile + 0.5 * j as f64 / denom);
            }
        }
        Image { rows, cols, data }
    }

    /// Additive Gaussian noise. Values are kept finite but not clipped to `[0, 1]`.
    pub fn with_noise(&self, std: f64, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let data = self
            .data
            .iter()
            .map(|v| {
                let w = v + std * rng.normal();
                w.clamp(-1e6, 1e6)
            })
            .collect();
        Image { rows: self.rows, cols: self.cols, data }
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        parse_pgm(&bytes)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>, binary: bool, maxval: u16) -> Result<()> {
        let path = path.as_ref();
        let bytes = encode_pgm(self, binary, maxval)?;
        fs::write(path, bytes).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
    }
}

fn bad(msg: &str) -> Error {
    Error::InvalidParameter(format!("malformed PGM: {msg}"))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(bad("unexpected end of data"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| bad("non-ASCII header"))
    }

    fn number(&mut self) -> Result<usize> {
        self.token()?.parse().map_err(|_| bad("expected a number"))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?.to_string();
    let cols = h.number()?;
    let rows = h.number()?;
    let maxval = h.number()?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must lie in 1..=65535"));
    }
    let n = rows * cols;
    let scale = maxval as f64;
    let raw: Vec<usize> = match magic.as_str() {
        "P2" => (0..n).map(|_| h.number()).collect::<Result<_>>()?,
        "P5" => {
            let start = h.pos + 1;
            let width = if maxval < 256 { 1 } else { 2 };
            let body = bytes.get(start..start + n * width).ok_or_else(|| bad("truncated pixel data"))?;
            if width == 1 {
                body.iter().map(|&b| b as usize).collect()
            } else {
                body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize).collect()
            }
        }
        _ => return Err(bad("only P2 and P5 are supported")),
    };
    if raw.iter().any(|&v| v > maxval) {
        return Err(bad("pixel above maxval"));
    }
    Image::new(rows, cols, raw.into_iter().map(|v| v as f64 / scale).collect())
}

pub fn encode_pgm(img: &Image, binary: bool, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::InvalidParameter("maxval must be positive".into()));
    }
    let m = maxval as f64;
    let q: Vec<u16> = img.data.iter().map(|v| (v.clamp(0.0, 1.0) * m).round() as u16).collect();
    let mut out = format!("{}\n{} {}\n{}\n", if binary { "P5" } else { "P2" }, img.cols, img.rows, maxval).into_bytes();
    if binary {
        for v in q {
            if maxval < 256 {
                out.push(v as u8);
            } else {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    } else {
        for row in q.chunks(img.cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_all_formats() {
        let img = Image::new(2, 3, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        for binary in [false, true] {
            for maxval in [255u16, 65535] {
                let back = parse_pgm(&encode_pgm(&img, binary, maxval).unwrap()).unwrap();
                assert_eq!((back.rows, back.cols), (2, 3));
                let tol = 0.5 / maxval as f64 + 1e-15;
                assert!(back.data.iter().zip(&img.data).all(|(a, b)| (a - b).abs() <= tol));
            }
        }
    }

    #[test]
    fn comments_and_errors() {
        let img = parse_pgm(b"P2\n# c\n2 1\n# d\n4\n0 4\n").unwrap();
        assert_eq!(img.data, vec![0.0, 1.0]);
        assert!(parse_pgm(b"P3\n1 1\n1\n0\n").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(parse_pgm(b"P2\n1 1\n3\n9\n").is_err());
    }
}
