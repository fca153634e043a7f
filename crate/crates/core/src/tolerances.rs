//! Numerical tolerances used across the crate.
//!
//! Each constant documents where it applies; the CLI can override the
//! geometric tolerance per invocation.

/// Unit-norm tolerance for spectral atom directions.
pub const UNIT_NORM: f64 = 1e-12;

/// Relative tolerance for boolean geometric tests (orthogonality,
/// independence, linearity, containment).
pub const GEOMETRY: f64 = 1e-7;

/// Distance from a moment-order boundary below which the order is rejected.
pub const MOMENT_ENDPOINT: f64 = 1e-9;

/// Relative eigenvalue threshold used to decide full-dimensionality.
pub const RANK: f64 = 1e-12;

/// Stopping threshold for the log-determinant improvement in the
/// inscribed-ellipsoid iteration.
pub const JOHN_LOGDET: f64 = 1e-10;

/// Iteration cap for the inscribed-ellipsoid iteration.
pub const JOHN_MAX_ITER: usize = 1_000_000;

/// Target absolute accuracy of the tabulated radial Fourier kernel.
pub const KERNEL_ABS: f64 = 1e-12;

/// Number of standard errors accepted by formula-versus-simulation checks.
pub const Z_SCORE: f64 = 3.0;
