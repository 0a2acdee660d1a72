//! Besicovitch-type coverings by geodesic balls on constant-curvature model
//! spaces, and differentiation of measures by geodesic ball-mass ratios.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – closed-form distances, exponential/log maps, angles, ball
//!   volumes and uniform ball sampling on ℝⁿ, Sⁿ, Hⁿ and flat tori.
//! * [`covering`] – greedy ball selection, overlap sets, inequality audits and
//!   the first-fit coloring into disjoint subfamilies.
//! * [`measures`] – atomic and density measures with geodesic-ball masses.
//! * [`differentiation`] – ball-ratio ladders, derivative estimates, the
//!   disjoint-ball fill, density-bound audits and the density identity check.
//! * [`fixtures`] – seeded random families and atoms used by the demo and tests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covering;
pub mod differentiation;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod measures;
pub mod quadrature;
pub mod tolerance;

pub use error::{Error, Result};
pub use geometry::{ModelSpace, Point, TangentVector};
pub use tolerance::Tolerances;
