//! CHSC binary cube format.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `CHSC` |
//! | 4     | `u32` version, currently 1 |
//! | 12    | `u32` N (rows), M (cols), L (bands) |
//! | 8·L   | `f64` wavelengths in nm |
//! | 16·N·M·L | `(f64 re, f64 im)` samples, band outer, then y, then x |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;

use super::ComplexCube;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CHSC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn write_to<W: Write>(cube: &ComplexCube, mut w: W) -> Result<()> {
    let (rows, cols, bands) = cube.shape();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for d in [rows, cols, bands] {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidCube(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for wl in cube.wavelengths() {
        w.write_all(&wl.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * cols);
    for row in cube.data().rows() {
        buf.clear();
        for z in row {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

/// Parses a complete CHSC byte buffer.
pub fn decode(bytes: &[u8]) -> Result<ComplexCube> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let rows = u32_at(bytes, 8) as usize;
    let cols = u32_at(bytes, 12) as usize;
    let bands = u32_at(bytes, 16) as usize;
    let samples = rows
        .checked_mul(cols)
        .and_then(|p| p.checked_mul(bands))
        .ok_or_else(|| Error::InvalidCube("declared size overflows".into()))?;
    let expected = HEADER_LEN + 8 * bands + 16 * samples;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::InvalidCube(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let wavelengths: Vec<f64> = (0..bands).map(|b| f64_at(bytes, HEADER_LEN + 8 * b)).collect();
    if wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneWavelengths);
    }
    let base = HEADER_LEN + 8 * bands;
    let data: Vec<Complex64> = (0..samples)
        .map(|i| {
            let at = base + 16 * i;
            Complex64::new(f64_at(bytes, at), f64_at(bytes, at + 8))
        })
        .collect();
    let data = Array3::from_shape_vec((bands, rows, cols), data)
        .map_err(|e| Error::InvalidCube(e.to_string()))?;
    ComplexCube::new(data, wavelengths)
}

pub fn read_from<R: Read>(mut r: R) -> Result<ComplexCube> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_cube<P: AsRef<Path>>(path: P) -> Result<ComplexCube> {
    read_from(BufReader::new(File::open(path)?))
}

pub fn write_cube<P: AsRef<Path>>(cube: &ComplexCube, path: P) -> Result<()> {
    write_to(cube, BufWriter::new(File::create(path)?))
}
