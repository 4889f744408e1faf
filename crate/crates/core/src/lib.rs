//! Quadratic Gauss paths, the random multiplicative model behind their
//! limiting distribution, the deterministic limit shapes indexed by
//! small-prime signatures, the complete exponential sums that govern
//! cusps of those shapes, and complex moments on both sides.

pub mod accum;
pub mod arith;
pub mod atlas;
pub mod cli;
pub mod expsums;
pub mod moments;
pub mod paths;
pub mod random_model;

pub use num_complex::Complex64;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("work budget exceeded: {0}")]
    Budget(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

/// `e(x) = exp(2πix)`, with `x` reduced mod 1 first.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let r = x - x.floor();
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `e(num/den)` with the reduction done in integers.
#[inline]
pub fn e_ratio(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// Fractional part of `k·t`, accurate even when `k·t` is huge.
#[inline]
pub fn frac_mul(k: f64, t: f64) -> f64 {
    let p = k * t;
    let err = k.mul_add(t, -p);
    let f = (p - p.floor()) + err;
    f - f.floor()
}
