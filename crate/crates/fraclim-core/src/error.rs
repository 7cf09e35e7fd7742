//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix handed in as symmetric was not, beyond tolerance.
    NonSymmetric { skew: f64 },
    /// Construction-time validation of a domain object failed.
    InvalidInput(String),
    /// Requested σ at or above the admissible threshold.
    InfeasibleSigma { sigma: f64, sigma_max: f64 },
    /// The damage law has ψ(0) = 0, so the optimal tube thickness degenerates.
    DegenerateDamageLaw,
    /// The numeric recession sequence did not settle.
    RecessionNotConverged { spread: f64, value: f64 },
    /// Bulk quadrature failed to converge within the refinement budget.
    QuadratureNotConverged { last: f64, previous: f64 },
    /// Tubes around distinct segments would overlap at this ε.
    TubeOverlap { eps: f64, eps_max: f64 },
    /// A run parameter is outside its admissible range.
    Parameter(String),
    /// The boundary descriptor is not C¹ (or otherwise unsupported).
    UnsupportedDomain(String),
    /// A discrete state violates a feasibility invariant.
    InfeasibleState { invariant: &'static str, node: usize },
    /// Conjugate gradients broke down (the system lost definiteness).
    CgBreakdown,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonSymmetric { skew } => {
                write!(f, "matrix is not symmetric (skew part {skew:.3e} exceeds 1e-12)")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InfeasibleSigma { sigma, sigma_max } => write!(
                f,
                "sigma {sigma:.6e} is not strictly below the admissible threshold {sigma_max:.6e}"
            ),
            Error::DegenerateDamageLaw => {
                write!(f, "damage law has psi(0) = 0; optimal tube thickness undefined")
            }
            Error::RecessionNotConverged { spread, value } => write!(
                f,
                "numeric recession did not converge (tail spread {spread:.3e} around {value:.6e})"
            ),
            Error::QuadratureNotConverged { last, previous } => write!(
                f,
                "bulk quadrature not converged after 12 refinement levels \
                 (last estimates {previous:.12e}, {last:.12e})"
            ),
            Error::TubeOverlap { eps, eps_max } => write!(
                f,
                "eps {eps:.6e} >= eps_max {eps_max:.6e}: damage tubes of distinct segments overlap"
            ),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::UnsupportedDomain(msg) => write!(f, "unsupported domain: {msg}"),
            Error::InfeasibleState { invariant, node } => {
                write!(f, "discrete state violates `{invariant}` at node {node}")
            }
            Error::CgBreakdown => write!(
                f,
                "conjugate gradients broke down; the potential may be inadmissible \
                 (run validate_bounds / the sigma-bound check)"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
