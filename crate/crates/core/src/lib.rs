//! Simplex component analysis: recover the vertices of a simplex from noisy
//! points sampled inside it. Ships three solvers for the vertex-fitting
//! problem (hinge-penalized minimum-volume fitting, its squared-hinge
//! variant, and a probabilistic formulation solved by block coordinate
//! descent), plus the supporting generation, preprocessing, initialization
//! and evaluation code.

pub mod error;
mod epg;
pub mod h2;
pub mod init;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod preprocess;
pub mod prsisal;
pub mod report;
pub mod rng;
pub mod sisal;
pub mod synth;

pub use error::{Result, ScaError};
