//! Geometric calculus for multivariate symmetric and one-sided stable laws.
//!
//! A [`StableModel`] pairs a characteristic exponent with a spectral
//! description. The gauge `u -> ||u||_F` of the associated star body `F`
//! drives everything else: densities, moments, covariation, orthogonality,
//! and the one-sided zonoid representations. The [`simulate`] module
//! provides seeded samplers that act as an independent Monte Carlo oracle
//! for every closed form.

pub mod cli;
pub mod config;
pub mod dependence;
pub mod error;
pub mod geometry;
mod kernel;
pub mod linalg;
pub mod optim;
pub mod moments;
pub mod onesided;
pub mod quadrature;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
pub use quadrature::{Estimate, QuadLevels, SphereRule};
pub use spectral::{Atom, ExplicitGauge, GaugeSource, Kind, SpectralMeasure, StableModel};
