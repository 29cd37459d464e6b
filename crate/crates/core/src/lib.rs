//! Random hyperbolic surfaces glued from pairs of pants.
//!
//! `S_{a,n}` is built from `2n` copies of the pants `P_a` glued without twist
//! along a configuration-model trivalent graph. This crate provides:
//!
//! - [`hyp`]: hyperboloid-model points, geodesics and isometries;
//! - [`hexagon`]: the symmetric right-angled hexagon and its reflection group;
//! - [`orbit`]: exact lattice-point counts in the hextree and critical-exponent fits;
//! - [`graph`]: configuration-model trivalent multigraphs;
//! - [`exploration`]: distance-ordered neighbourhood exploration with bad-step accounting;
//! - [`metric`]: exact midpoint distances on `S_{a,n}` and diameter bounds;
//! - [`experiments`]: reproducible Monte Carlo campaigns and scaling fits.

mod dd;
pub mod error;
pub mod experiments;
pub mod exploration;
pub mod graph;
pub mod hexagon;
pub mod hyp;
pub mod metric;
pub mod orbit;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
