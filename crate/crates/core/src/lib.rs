//! Circle-method pipeline for systems of integral polynomials.
//!
//! The crate is organized around the stages of a Hardy-Littlewood style
//! count of weighted prime points on the variety `p(x) = s`:
//!
//! * [`poly`] — exact integer polynomial systems, grading, splitting.
//! * [`rank`] — Birch and Schmidt rank bounds with certificates.
//! * [`regularize`] — replacement of low-rank systems by higher-rank ones
//!   whose level sets refine the original's.
//! * [`sieve`] — von Mangoldt tables.
//! * [`local`] — complete exponential sums over reduced residues, local
//!   factors and the truncated singular series.
//! * [`arch`] — the singular integral.
//! * [`count`] — weighted prime-point counts and the comparison against
//!   the predicted main term.
//! * [`arcs`] — major/minor arc geometry and exponential sums over `[N]`.
//!
//! Exact arithmetic is `BigInt`/`BigRational` throughout the counting and
//! algebra paths; numeric paths are `f64`/`Complex64`. Evaluation is
//! generic over the scalar type via [`scalar::Scalar`].

pub mod arch;
pub mod arcs;
pub mod count;
pub mod local;
pub mod poly;
pub mod rank;
pub mod ratmat;
pub mod regularize;
pub mod scalar;
pub mod sieve;

use thiserror::Error;

pub use num_bigint::BigInt;
pub use num_complex::Complex64;
pub use num_rational::BigRational;

/// Exact integer scalar used for coefficients and counts.
pub type Int = BigInt;
/// Exact rational scalar used for linear algebra and normalized counts.
pub type Rat = BigRational;
/// Floating scalar for the numeric (archimedean / exponential sum) paths.
pub type Real = f64;
/// Complex floating scalar.
pub type Cplx = Complex64;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable split does not partition the index set: {0}")]
    BadSplit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported degree: {0}")]
    Degree(String),
    #[error("argument out of range: {0}")]
    BadArgument(String),
    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("rank threshold not met: wanted {wanted}, achieved lower bound {achieved}")]
    ThresholdNotMet { wanted: i64, achieved: i64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
