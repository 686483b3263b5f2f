//! Extreme value statistics of chaotic maps and flows.
//!
//! The pipeline runs in five stages, one module each:
//!
//! 1. [`dynamics`] iterates a system (planar maps, a solid-torus map, or a 3D
//!    flow sampled at fixed intervals) into an orbit of states;
//! 2. [`observables`] projects states to a scalar series through one of a
//!    small family of observation functions;
//! 3. [`extremes`] reduces the series to maxima over consecutive
//!    equal-length blocks;
//! 4. [`gevfit`] fits a generalized extreme value distribution to the block
//!    maxima by the method of L-moments, with subsample uncertainty;
//! 5. [`analysis`] computes Lyapunov spectra and attractor-geometry
//!    predictions for the tail index, so fitted and predicted shapes can be
//!    compared.
//!
//! [`harness`] wires the stages into reproducible experiments: sweeps over
//! block lengths or model parameters, density/quantile diagnostics, and
//! CSV/JSON export. Everything is deterministic given a seed.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod extremes;
pub mod gevfit;
pub mod harness;
pub mod observables;
pub mod special;
pub(crate) mod util;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
