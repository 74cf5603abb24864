//! Two-parameter Young integration and a rotated fixed-point solver for the
//! one-dimensional wave equation driven by a fractional-Brownian/Riesz
//! noise.
//!
//! The wave equation `∂²Y/∂s² − ∂²Y/∂x² = σ(Y) Ẋ` with zero initial data is
//! rotated by −45° so that light cones become right triangles with
//! axis-parallel legs. The mild form then reads
//! `y(s,t) = ∫∫_{C̃(s,t)} σ(y) dx`, a two-parameter Young integral that
//! [`solver`] discretizes with lower-left Riemann sums and solves either by
//! characteristic marching or by Picard iteration.

pub mod cone;
pub mod diagnostics;
pub mod direct;
pub mod error;
pub mod grid;
pub mod io;
pub mod noise;
pub mod numeric;
pub mod par;
pub mod rng;
pub mod sigma;
pub mod solver;
pub mod young;

pub use error::{Error, Result};
pub use grid::{GridField, HolderExponents, HolderSeminorms, Rectangle};
pub use par::Exec;
