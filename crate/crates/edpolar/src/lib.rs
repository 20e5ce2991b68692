//! Critical-point asymptotics and Euclidean distance degrees on affine
//! varieties.
//!
//! The library combines an exact symbolic kernel (rational polynomial
//! arithmetic and Groebner bases) with numeric homotopy continuation to
//! locate the limits of critical trajectories of a perturbed polynomial
//! function on a possibly singular variety, to count how many trajectories
//! collapse into each limit point or escape to infinity, and to derive
//! Euclidean distance degrees for arbitrary data points.
//!
//! Module map:
//! - [`polycore`]: exact polynomials, parsing, evaluation, generic linear forms
//! - [`ideals`]: Buchberger engine, saturation, elimination, dimension
//! - [`geometry`]: singular loci, stratified critical loci, polar curves
//! - [`tracker`]: square critical systems, total-degree homotopy, path tracking
//! - [`multiplicity`]: local intersection numbers and the polar difference formula
//! - [`stratcalc`]: exact coefficient calculus over stratification posets
//! - [`eddeg`]: end-to-end distance-degree pipelines
//! - [`problem`] / [`report`]: the file formats spoken by the CLI

pub use num::complex::Complex64;

pub mod eddeg;
pub mod geometry;
pub mod ideals;
pub mod multiplicity;
pub mod polycore;
pub mod problem;
pub mod report;
pub mod stratcalc;
pub mod tracker;
