//! Finite-difference Poisson solver for point charges embedded in a smoothly
//! varying dielectric.
//!
//! The potential is split as `u = G + u_rf`, where `G` is the Coulomb sum of
//! the charges in the core permittivity and `u_rf` is a smooth reaction field
//! solving `-div(eps grad u_rf) = grad(eps) . grad(G)`. Because the source is
//! bounded, a plain second-order stencil resolves it without any special
//! treatment of the charge singularities. A trilinear charge-spreading
//! baseline and a 1D radial reference solver are provided for comparison.

pub mod charges;
pub mod dielectric;
pub mod error;
pub mod grid;
pub mod harness;
pub mod operator;
pub mod radial;
pub mod solver;

pub use charges::{ChargeSet, PointCharge};
pub use dielectric::{BandProfile, ConstantDielectric, Dielectric, TanhSphericalDielectric};
pub use error::{Error, Result};
pub use grid::{Grid, ScalarField};
pub use operator::{LinearSystem, VariableCoefficientOperator};
pub use radial::{RadialProblem, RadialProfile};
pub use solver::{solve, Preconditioner, SolveReport, SolverConfig};

/// Cartesian point or vector.
pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}
