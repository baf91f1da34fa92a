//! Versioned binary container and CSV export for a [`SampleBatch`].
//!
//! Binary layout (little endian): magic, `u32` version, `u64` header length,
//! JSON header (spec, seed, ess, acceptance rate, chains), `u64` sample count,
//! `u64` mode count, then per sample the interleaved re/im coefficients
//! followed by the log weight.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{MeasureSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::field::Field;

pub const BATCH_MAGIC: &[u8; 8] = b"GIBBSSMP";
pub const BATCH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: MeasureSpec,
    seed: u64,
    ess: f64,
    acceptance_rate: Option<f64>,
    chains: usize,
}

pub fn encode_batch(batch: &SampleBatch) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        spec: batch.spec.clone(),
        seed: batch.seed,
        ess: batch.ess,
        acceptance_rate: batch.acceptance_rate,
        chains: batch.chains,
    })?;
    let d = batch.fields.first().map_or(0, |f| f.len());
    let mut out = Vec::with_capacity(36 + header.len() + batch.len() * (2 * d + 1) * 8);
    out.extend_from_slice(BATCH_MAGIC);
    out.extend_from_slice(&BATCH_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(batch.len() as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    for (f, lw) in batch.fields.iter().zip(&batch.log_weights) {
        for z in &f.coeffs {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out.extend_from_slice(&lw.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_batch(bytes: &[u8]) -> std::result::Result<SampleBatch, String> {
    let mut pos = 0usize;
    let mut take = |len: usize| -> std::result::Result<&[u8], String> {
        let end = pos.checked_add(len).filter(|&e| e <= bytes.len()).ok_or("unexpected end of data")?;
        let s = &bytes[pos..end];
        pos = end;
        Ok(s)
    };
    if take(8)? != BATCH_MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != BATCH_FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let hlen = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(take(hlen)?).map_err(|e| format!("header: {e}"))?;
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let expected = n.checked_mul(2 * d + 1).and_then(|v| v.checked_mul(8)).ok_or("sample table too large")?;
    let body = take(expected)?;
    if pos != bytes.len() {
        return Err("trailing bytes".into());
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut fields = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    for _ in 0..n {
        let coeffs = (0..d)
            .map(|_| Complex64::new(values.next().unwrap(), values.next().unwrap()))
            .collect();
        fields.push(Field::new(coeffs));
        log_weights.push(values.next().unwrap());
    }
    Ok(SampleBatch {
        fields,
        log_weights,
        seed: header.seed,
        spec: header.spec,
        ess: header.ess,
        acceptance_rate: header.acceptance_rate,
        chains: header.chains,
    })
}

pub fn write_batch(batch: &SampleBatch, path: &Path) -> Result<()> {
    std::fs::write(path, encode_batch(batch)?)?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let bytes = std::fs::read(path)?;
    decode_batch(&bytes).map_err(|reason| Error::Format { path: Some(path.to_path_buf()), reason })
}

/// Columns `sample, re_1, im_1, …, re_d, im_d, log_weight`.
pub fn write_batch_csv(batch: &SampleBatch, path: &Path) -> Result<()> {
    let d = batch.fields.first().map_or(0, |f| f.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample".to_string()];
    for j in 1..=d {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    header.push("log_weight".into());
    w.write_record(&header)?;
    for (i, (f, lw)) in batch.fields.iter().zip(&batch.log_weights).enumerate() {
        let mut row = vec![i.to_string()];
        for z in &f.coeffs {
            row.push(format!("{:.17e}", z.re));
            row.push(format!("{:.17e}", z.im));
        }
        row.push(format!("{lw:.17e}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{sample_measure, SamplerOptions};
    use crate::spectral::{solve_spectrum, GridSpec, Scheme};

    #[test]
    fn binary_round_trip_and_truncation() {
        let basis = solve_spectrum(4.0, GridSpec::new(3.0, 256, Scheme::FiniteDifferenceOrder4), 3).unwrap();
        let batch = sample_measure(&MeasureSpec::free_gaussian(3), &basis, 50, 9, &SamplerOptions::default(), None).unwrap();
        let bytes = encode_batch(&batch).unwrap();
        assert_eq!(decode_batch(&bytes).unwrap(), batch);
        assert!(decode_batch(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_batch(&extra).is_err());
    }
}
