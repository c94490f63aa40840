//! Simulation and verification engine for i.i.d. random iterations of
//! J-monotone maps on subsets of R^k.
//!
//! The crate checks the J-splitting condition, samples the stationary
//! measure by pullback (reverse-order) iteration, measures synchronization
//! of random orbits, computes Wasserstein-1 distances between empirical
//! measures, and estimates the asymptotic variance of additive functionals
//! through the Poisson equation of the transfer operator.

// `!(x > 0.0)` guards are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clt;
pub mod error;
pub mod family;
pub mod io;
pub mod noise;
pub mod order;
pub mod run;
pub mod sim;
pub mod splitting;
pub mod stats;
pub mod sync;
pub mod transport;

pub use error::{Error, Result};
pub use family::{FamilyConfig, MapFamily};
pub use noise::{Noise, NoiseBlock, NoiseSpec};
pub use order::{Hyperbox, JOrder, PointCloud, PointOrder, SetOrder};
