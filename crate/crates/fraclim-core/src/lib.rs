//! Damage-regularized fracture energies with general low-order potentials.
//!
//! The crate evaluates three related objects on a 2D domain:
//!
//! * the regularized energy `F_eps(u, v) = ∫ v 𝔸e(u)·e(u) + ψ(v)/ε + F(x, e(u), v)`
//!   over displacement/damage pairs with `αε < v ≤ 1` and `|∇v| ≤ 1/ε`,
//! * its sharp limit `Φ(u)` on displacements with an explicit polyline jump set,
//!   including the jump-weighted surface terms and the recession part of the
//!   potential, plus the boundary relaxation `R(u, f)` paid for detaching from
//!   a Dirichlet datum,
//! * the explicit recovery construction that squeezes a damage tube of
//!   optimized thickness around the jump set and whose energies converge to
//!   the sharp value, with or without a pinned boundary datum.
//!
//! On top of that sits a structured-grid alternating-minimization solver for
//! the constrained minimum problems of the regularized energy.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature and enable `libm` to build without the standard library.
//! All evaluation paths are deterministic: quadrature uses fixed panel
//! decompositions, random sampling is driven by caller-provided seeds.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod error;
pub mod geometry;
pub mod material;
pub mod num;
pub mod potential;
pub mod recovery;
pub mod rng;
pub mod sharp;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{DomainRect, Point2, Vec2};
pub use material::{DamageLaw, ElasticTensor};
pub use potential::{PotentialSpec, PressureLaw, SpatialField, ValidationReport};
pub use sharp::{CrackSegment, CrackedDisplacement, SharpEnergyBreakdown};
pub use solver::{DiscreteState, EnergyReport, Grid};
pub use tensor::SymMat2;
