//! Variable clustering under latent block covariance models.
//!
//! The crate implements PECOK, a penalized convex relaxation of K-means for
//! clustering the *variables* (columns) of a Gaussian sample whose covariance
//! has the block form `Σ = A C Aᵗ + Γ`. The pipeline has three steps:
//!
//! 1. estimate the diagonal noise `Γ` before the partition is known ([`gamma`]),
//! 2. solve a semidefinite program over doubly stochastic PSD matrices ([`sdp`]),
//! 3. round the solution with K-means ([`kmeans`]).
//!
//! A corrected spectral clustering baseline lives in [`spectral`], partition
//! comparison in [`metrics`], and a Monte-Carlo harness that maps recovery
//! frequencies against the separation threshold in [`experiment`].
//!
//! Data-parallel loops (noise-estimator tables, K-means restarts, simulation
//! replicates) run on rayon when the `parallel` feature is enabled, which it
//! is by default. See [`Execution`].

pub mod error;
pub mod exec;
pub mod experiment;
pub mod gamma;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pecok;
pub mod sdp;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gamma::{GammaEstimate, GammaMethod};
pub use kmeans::{KmeansOptions, KmeansResult};
pub use metrics::ComparisonReport;
pub use model::{DataMatrix, ModelSpec, Partition};
pub use pecok::{PecokOptions, PecokResult};
pub use sdp::{SdpBackend, SdpOptions, SdpSolution};
pub use spectral::SpectralResult;

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
