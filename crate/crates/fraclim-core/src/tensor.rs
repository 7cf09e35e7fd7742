//! Small fixed-size tensor types for plane problems.
//!
//! Everything is 2D: displacements are [`Vec2`], gradients are [`Mat2`] and
//! strains are [`SymMat2`]. The inner product on matrices is the Frobenius
//! one, `M·L = tr(M Lᵀ)`.

use crate::error::{Error, Result};
use crate::num;

pub use crate::geometry::{Point2, Vec2};

/// Dense 2x2 matrix (row major).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym(&self) -> SymMat2 {
        SymMat2 {
            xx: self.m[0][0],
            yy: self.m[1][1],
            xy: 0.5 * (self.m[0][1] + self.m[1][0]),
        }
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2 {
            x: self.m[0][0] * v.x + self.m[0][1] * v.y,
            y: self.m[1][0] * v.x + self.m[1][1] * v.y,
        }
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let mut r = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        r
    }

    pub fn identity() -> Mat2 {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] -= o.m[i][j];
            }
        }
        r
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for row in &self.m {
            for &v in row {
                s += v * v;
            }
        }
        num::sqrt(s)
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Outer product `a ⊗ b`.
    pub fn outer(a: Vec2, b: Vec2) -> Mat2 {
        Mat2::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
    }
}

/// Symmetric 2x2 matrix stored as `(xx, yy, xy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymMat2 { xx, yy, xy }
    }

    pub fn identity() -> Self {
        SymMat2 { xx: 1.0, yy: 1.0, xy: 0.0 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymMat2 { xx: a, yy: b, xy: 0.0 }
    }

    /// Validate symmetry of a dense matrix (tolerance 1e-12) and convert.
    pub fn from_matrix(m: &Mat2) -> Result<Self> {
        let skew = num::abs(m.m[0][1] - m.m[1][0]);
        if skew > 1e-12 {
            return Err(Error::NonSymmetric { skew });
        }
        Ok(m.sym())
    }

    /// Symmetrized dyad `a ⊙ b = (a⊗b + b⊗a)/2`.
    pub fn sym_dyad(a: Vec2, b: Vec2) -> Self {
        SymMat2 {
            xx: a.x * b.x,
            yy: a.y * b.y,
            xy: 0.5 * (a.x * b.y + a.y * b.x),
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius inner product `M·L = tr(M Lᵀ)`.
    pub fn dot(&self, o: &SymMat2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        num::sqrt(self.dot(self))
    }

    pub fn scale(&self, s: f64) -> SymMat2 {
        SymMat2 { xx: s * self.xx, yy: s * self.yy, xy: s * self.xy }
    }

    pub fn add(&self, o: &SymMat2) -> SymMat2 {
        SymMat2 { xx: self.xx + o.xx, yy: self.yy + o.yy, xy: self.xy + o.xy }
    }

    pub fn sub(&self, o: &SymMat2) -> SymMat2 {
        SymMat2 { xx: self.xx - o.xx, yy: self.yy - o.yy, xy: self.xy - o.xy }
    }

    /// Eigenvalues, smallest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let r = num::hypot(0.5 * (self.xx - self.yy), self.xy);
        (mean - r, mean + r)
    }

    /// `λ_max - λ_min`, the Tresca-style eigenvalue spread.
    pub fn eigen_gap(&self) -> f64 {
        2.0 * num::hypot(0.5 * (self.xx - self.yy), self.xy)
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.xx, self.xy, self.xy, self.yy)
    }
}
