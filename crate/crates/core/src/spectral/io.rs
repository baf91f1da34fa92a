//! Versioned binary container and CSV export for a [`SpectralBasis`].
//!
//! Layout (little endian): magic, `u32` version, `f64` s (inf for the box),
//! `f64` half-width, `u64` grid points, `u8` scheme order, `u64` mode count,
//! eigenvalues, discretization errors, then the eigenfunction table row by row.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GridSpec, Scheme, SpectralBasis};
use crate::error::{Error, Result};

pub const BASIS_MAGIC: &[u8; 8] = b"GIBBSBAS";
pub const BASIS_FORMAT_VERSION: u32 = 1;

pub fn encode_basis(basis: &SpectralBasis) -> Vec<u8> {
    let n = basis.grid.n_points;
    let k = basis.n_modes();
    let mut out = Vec::with_capacity(64 + 16 * k + 8 * k * n);
    out.extend_from_slice(BASIS_MAGIC);
    out.extend_from_slice(&BASIS_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&basis.s_exponent.to_le_bytes());
    out.extend_from_slice(&basis.grid.domain_half_width.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.push(basis.grid.scheme.code());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    for v in basis.eigenvalues.iter().chain(&basis.discretization_errors) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for row in &basis.eigenfunctions {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err("unexpected end of data".into()),
        }
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize) -> std::result::Result<Vec<f64>, String> {
        (0..count).map(|_| self.f64()).collect()
    }
}

pub fn decode_basis(bytes: &[u8]) -> std::result::Result<SpectralBasis, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != BASIS_MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != BASIS_FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let s_exponent = c.f64()?;
    let domain_half_width = c.f64()?;
    let n = c.u64()? as usize;
    let scheme = Scheme::from_code(c.take(1)?[0]).ok_or("unknown scheme")?;
    let k = c.u64()? as usize;
    if k.checked_mul(n).map_or(true, |t| t > bytes.len()) {
        return Err("table size does not fit the data".into());
    }
    let eigenvalues = c.f64s(k)?;
    let discretization_errors = c.f64s(k)?;
    let eigenfunctions = (0..k).map(|_| c.f64s(n)).collect::<std::result::Result<Vec<_>, _>>()?;
    if c.pos != bytes.len() {
        return Err("trailing bytes".into());
    }
    Ok(SpectralBasis {
        s_exponent,
        eigenvalues,
        eigenfunctions,
        grid: GridSpec { domain_half_width, n_points: n, scheme },
        discretization_errors,
    })
}

pub fn write_basis(basis: &SpectralBasis, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_basis(basis))?;
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<SpectralBasis> {
    let bytes = fs::read(path)?;
    decode_basis(&bytes).map_err(|reason| Error::Format { path: Some(path.to_path_buf()), reason })
}

/// Columns `j, lambda_j` with `j` starting at 1.
pub fn write_eigenvalues_csv(basis: &SpectralBasis, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["j", "lambda_j"])?;
    for (j, l) in basis.eigenvalues.iter().enumerate() {
        w.write_record([(j + 1).to_string(), format!("{l:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::solve_spectrum;

    #[test]
    fn container_round_trip() {
        let b = solve_spectrum(f64::INFINITY, GridSpec::new(1.0, 128, Scheme::FiniteDifferenceOrder2), 5).unwrap();
        let bytes = encode_basis(&b);
        assert_eq!(decode_basis(&bytes).unwrap(), b);
        assert!(decode_basis(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_basis(&bad).is_err());
    }
}
