pub mod bench;
pub mod compress;
pub mod eval;
pub mod factorize;
pub mod generate;
pub mod inspect;
pub mod reconstruct;
pub mod sweep;

/// Calls `$f::<f32>` or `$f::<f64>` according to a runtime dtype.
macro_rules! dispatch {
    ($dtype:expr, $f:ident($($arg:expr),* $(,)?)) => {
        match $dtype {
            pifa_core::DType::F32 => $f::<f32>($($arg),*),
            pifa_core::DType::F64 => $f::<f64>($($arg),*),
        }
    };
}

pub(crate) use dispatch;
