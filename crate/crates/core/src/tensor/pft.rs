//! PFT tensor container, little-endian:
//!
//! | field | bytes |
//! |-------|-------|
//! | magic `PFT1` | 4 |
//! | dtype (0 = f32, 1 = f64) | 1 |
//! | ndim (always 2) | 1 |
//! | rows | 8 (u64) |
//! | cols | 8 (u64) |
//! | values, row-major | rows * cols * dtype size |

use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{DType, Scalar};

pub const PFT_MAGIC: &[u8; 4] = b"PFT1";
pub const PFT_HEADER_BYTES: usize = 4 + 1 + 1 + 8 + 8;

/// A matrix of either on-disk dtype.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMatrix {
    F32(DenseMatrix<f32>),
    F64(DenseMatrix<f64>),
}

impl AnyMatrix {
    pub fn dtype(&self) -> DType {
        match self {
            AnyMatrix::F32(_) => DType::F32,
            AnyMatrix::F64(_) => DType::F64,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyMatrix::F32(m) => m.shape(),
            AnyMatrix::F64(m) => m.shape(),
        }
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        match self {
            AnyMatrix::F32(m) => m.cast(),
            AnyMatrix::F64(m) => m.clone(),
        }
    }
}

/// Cursor over an in-memory file that reports byte offsets on failure.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn error(&self, detail: impl Into<String>) -> Error {
        Error::Format {
            offset: self.offset(),
            detail: detail.into(),
        }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error(format!(
                "truncated {what}: need {n} bytes, {} remain",
                self.bytes.len() - self.pos
            ))),
        }
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.offset();
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::Format {
            offset: at,
            detail: format!("{what} {v} does not fit in memory"),
        })
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::Format {
                offset: 0,
                detail: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(expected)
                ),
            });
        }
        Ok(())
    }

    pub(crate) fn dtype(&mut self) -> Result<DType> {
        let at = self.offset();
        let code = self.u8("dtype")?;
        DType::from_code(code).ok_or(Error::Format {
            offset: at,
            detail: format!("unknown dtype code {code}"),
        })
    }

    pub(crate) fn values<T: Scalar>(&mut self, rows: usize, cols: usize, what: &str) -> Result<DenseMatrix<T>> {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(T::DTYPE.size()))
            .ok_or_else(|| self.error(format!("{what} size overflows")))?;
        let raw = self.take(count, what)?;
        let data = raw.chunks_exact(T::DTYPE.size()).map(T::read_le).collect();
        DenseMatrix::new(rows, cols, data)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn require_finite<T: Scalar>(m: &DenseMatrix<T>, what: &str) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::Invalid(format!("{what} contains non-finite values")));
    }
    Ok(())
}

pub(crate) fn push_values<T: Scalar>(m: &DenseMatrix<T>, out: &mut Vec<u8>) {
    out.reserve(m.len() * T::DTYPE.size());
    for &v in m.as_slice() {
        v.write_le(out);
    }
}

pub fn encode_pft<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<u8>> {
    require_finite(m, "matrix")?;
    let mut out = Vec::with_capacity(PFT_HEADER_BYTES + m.len() * T::DTYPE.size());
    out.extend_from_slice(PFT_MAGIC);
    out.push(T::DTYPE.code());
    out.push(2);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    push_values(m, &mut out);
    Ok(out)
}

pub fn decode_pft_any(bytes: &[u8]) -> Result<AnyMatrix> {
    let mut r = ByteReader::new(bytes);
    r.magic(PFT_MAGIC)?;
    let dtype = r.dtype()?;
    let ndim_at = r.offset();
    let ndim = r.u8("ndim")?;
    if ndim != 2 {
        return Err(Error::Format {
            offset: ndim_at,
            detail: format!("ndim {ndim}, only 2 is supported"),
        });
    }
    let rows = r.dim("rows")?;
    let cols = r.dim("cols")?;
    let m = match dtype {
        DType::F32 => AnyMatrix::F32(r.values(rows, cols, "payload")?),
        DType::F64 => AnyMatrix::F64(r.values(rows, cols, "payload")?),
    };
    r.finish()?;
    Ok(m)
}

pub fn decode_pft<T: Scalar>(bytes: &[u8]) -> Result<DenseMatrix<T>> {
    let any = decode_pft_any(bytes)?;
    let found = any.dtype();
    let mismatch = || Error::Format {
        offset: 4,
        detail: format!(
            "dtype mismatch: file holds {}, expected {}",
            found.name(),
            T::DTYPE.name()
        ),
    };
    if found != T::DTYPE {
        return Err(mismatch());
    }
    // Same dtype, so the cast is an exact copy.
    Ok(match any {
        AnyMatrix::F32(m) => m.cast(),
        AnyMatrix::F64(m) => m.cast(),
    })
}

pub fn write_pft<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    crate::fsio::write(path, encode_pft(m)?)?;
    Ok(())
}

pub fn read_pft<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    decode_pft(&crate::fsio::read(path)?)
}

pub fn read_pft_any(path: impl AsRef<Path>) -> Result<AnyMatrix> {
    decode_pft_any(&crate::fsio::read(path)?)
}
