//! PIFL layer file, little-endian: magic `PIFL`, dtype u8, `m`, `n`, `r` as
//! u64, `r` pivot indices as u64, then `W_p` and `C` row-major.

use std::path::Path;

use super::layer::PifaLayer;
use crate::error::{Error, Result};
use crate::scalar::{DType, Scalar};
use crate::tensor::pft::{push_values, require_finite, ByteReader};

pub const PIFL_MAGIC: &[u8; 4] = b"PIFL";
pub const PIFL_HEADER_BYTES: usize = 4 + 1 + 3 * 8;

/// Exact serialized size of a layer.
pub fn pifl_file_bytes(m: usize, n: usize, r: usize, dtype: DType) -> u64 {
    let values = (r * n + (m - r) * r) as u64;
    PIFL_HEADER_BYTES as u64 + 8 * r as u64 + values * dtype.size() as u64
}

pub fn encode_pifa<T: Scalar>(p: &PifaLayer<T>) -> Result<Vec<u8>> {
    require_finite(p.w_p(), "pivot-row matrix")?;
    require_finite(p.c(), "coefficient matrix")?;
    let mut out = Vec::with_capacity(pifl_file_bytes(p.m(), p.n(), p.rank(), T::DTYPE) as usize);
    out.extend_from_slice(PIFL_MAGIC);
    out.push(T::DTYPE.code());
    for v in [p.m(), p.n(), p.rank()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &i in p.pivots() {
        out.extend_from_slice(&(i as u64).to_le_bytes());
    }
    push_values(p.w_p(), &mut out);
    push_values(p.c(), &mut out);
    Ok(out)
}

pub fn decode_pifa<T: Scalar>(bytes: &[u8]) -> Result<PifaLayer<T>> {
    let mut rd = ByteReader::new(bytes);
    rd.magic(PIFL_MAGIC)?;
    let dtype_at = rd.offset();
    let dtype = rd.dtype()?;
    if dtype != T::DTYPE {
        return Err(Error::Format {
            offset: dtype_at,
            detail: format!(
                "dtype mismatch: file holds {}, expected {}",
                dtype.name(),
                T::DTYPE.name()
            ),
        });
    }
    let m = rd.dim("m")?;
    let n = rd.dim("n")?;
    let r_at = rd.offset();
    let r = rd.dim("r")?;
    if r == 0 || r > m || r > n {
        return Err(Error::Format {
            offset: r_at,
            detail: format!("rank {r} invalid for a {m}x{n} layer"),
        });
    }
    let mut seen = vec![false; m];
    let mut pivots = Vec::with_capacity(r);
    for _ in 0..r {
        let at = rd.offset();
        let i = rd.dim("pivot index")?;
        if i >= m || seen[i] {
            return Err(Error::Format {
                offset: at,
                detail: format!("pivot index {i} out of range or repeated"),
            });
        }
        seen[i] = true;
        pivots.push(i);
    }
    let w_p = rd.values(r, n, "pivot-row matrix")?;
    let c = rd.values(m - r, r, "coefficient matrix")?;
    rd.finish()?;
    PifaLayer::from_parts(m, n, pivots, w_p, c)
}

pub fn write_pifa<T: Scalar>(path: impl AsRef<Path>, p: &PifaLayer<T>) -> Result<()> {
    crate::fsio::write(path, encode_pifa(p)?)?;
    Ok(())
}

pub fn read_pifa<T: Scalar>(path: impl AsRef<Path>) -> Result<PifaLayer<T>> {
    decode_pifa(&crate::fsio::read(path)?)
}
