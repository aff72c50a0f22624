// Validation guards use negated comparisons (`!(x > 0.0)`) so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

//! Numerical laboratory for the Calabi flow in complex dimension one.
//!
//! Two backends realize metrics in a fixed Kähler class: a spectral flat
//! torus chart and a toric description of the sphere through symplectic
//! potentials on the moment interval. On top of them sit the energy
//! functionals (Aubin I, energy E, Mabuchi, Calabi), a stiffness-aware
//! semi-implicit integrator for the fourth-order flow
//! `∂φ/∂t = S(ω_φ) - Ŝ`, local-energy and Lelong-number probes, and the
//! exact radial quadratures of the scaled round-metric family on the sphere.

pub mod error;
pub mod flow;
pub mod fubini_study;
pub mod functionals;
pub mod geometry;
pub mod io;
pub mod regularity;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use functionals::FunctionalReport;
pub use geometry::{
    Backend, GeometryConfig, Measure, MetricDensity, PotentialField, KAHLER_FLOOR,
};
