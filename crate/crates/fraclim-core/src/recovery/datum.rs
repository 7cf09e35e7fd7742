//! Recovery with a pinned Dirichlet datum on a C¹ boundary.
//!
//! The displacement is extended beyond the boundary by the datum composed
//! with the boundary projection, turning trace mismatch into ordinary jump
//! set; the interior recovery construction then runs on the extended domain
//! and a thin diffeomorphism pulls everything back onto the original domain,
//! pinning `u_ε = f`, `v_ε = 1` on the boundary bit-exactly.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{DomainRect, Point2, Vec2};
use crate::material::{coefficients, DamageLaw, ElasticTensor};
use crate::num;
use crate::potential::PotentialSpec;
use crate::sharp::{BoundaryTraceFn, CrackSegment, CrackedDisplacement, TracePair};
use crate::tensor::{Mat2, SymMat2};

use super::{build_recovery, optimal_theta, RecoveryEnergy, RecoveryFields};

/// C¹ boundary descriptors with closed-form projection and signed distance
/// (negative inside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainBoundary {
    Disk { center: Point2, radius: f64 },
    /// Rectangle with quarter-circle corners of radius `corner_radius > 0`.
    RoundedRect { rect: DomainRect, corner_radius: f64 },
}

impl DomainBoundary {
    pub fn rounded_rect(rect: DomainRect, corner_radius: f64) -> Result<Self> {
        if corner_radius <= 0.0 {
            return Err(Error::UnsupportedDomain(String::from(
                "sharp corners are not C¹; corner_radius must be positive",
            )));
        }
        if 2.0 * corner_radius > num::min(rect.width(), rect.height()) {
            return Err(Error::UnsupportedDomain(String::from(
                "corner radius exceeds half the rectangle extent",
            )));
        }
        Ok(DomainBoundary::RoundedRect { rect, corner_radius })
    }

    pub fn disk(center: Point2, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::UnsupportedDomain(String::from("radius must be positive")));
        }
        Ok(DomainBoundary::Disk { center, radius })
    }

    /// Signed distance to the boundary, negative inside.
    pub fn signed_dist(&self, p: Point2) -> f64 {
        match *self {
            DomainBoundary::Disk { center, radius } => p.sub(center).norm() - radius,
            DomainBoundary::RoundedRect { rect, corner_radius } => {
                // Distance to the inner rectangle shrunk by the radius, then
                // offset: the classic rounded-box SDF.
                let c = rect.center();
                let hx = 0.5 * rect.width() - corner_radius;
                let hy = 0.5 * rect.height() - corner_radius;
                let qx = num::abs(p.x - c.x) - hx;
                let qy = num::abs(p.y - c.y) - hy;
                let outside = Vec2::new(num::max(qx, 0.0), num::max(qy, 0.0)).norm();
                let inside = num::min(num::max(qx, qy), 0.0);
                outside + inside - corner_radius
            }
        }
    }

    /// Orthogonal projection onto the boundary (valid in the tubular
    /// neighborhood where it is unique).
    pub fn project(&self, p: Point2) -> Point2 {
        match *self {
            DomainBoundary::Disk { center, radius } => {
                let r = p.sub(center);
                let n = r.norm();
                if n == 0.0 {
                    return center.add(Vec2::new(radius, 0.0));
                }
                center.add(r.scale(radius / n))
            }
            DomainBoundary::RoundedRect { rect, corner_radius } => {
                let c = rect.center();
                let hx = 0.5 * rect.width() - corner_radius;
                let hy = 0.5 * rect.height() - corner_radius;
                // Closest point on the shrunk rectangle (the medial core).
                let kx = num::clamp(p.x, c.x - hx, c.x + hx);
                let ky = num::clamp(p.y, c.y - hy, c.y + hy);
                let core = Point2::new(kx, ky);
                let r = p.sub(core);
                let n = r.norm();
                if n == 0.0 {
                    // Deep inside: project outward along the closest axis.
                    let dx = hx + corner_radius - num::abs(p.x - c.x);
                    let dy = hy + corner_radius - num::abs(p.y - c.y);
                    if dx < dy {
                        let sx = if p.x >= c.x { 1.0 } else { -1.0 };
                        return Point2::new(c.x + sx * (hx + corner_radius), p.y);
                    }
                    let sy = if p.y >= c.y { 1.0 } else { -1.0 };
                    return Point2::new(p.x, c.y + sy * (hy + corner_radius));
                }
                core.add(r.scale(corner_radius / n))
            }
        }
    }

    /// Outward unit normal at (the projection of) `p`.
    pub fn outward_normal(&self, p: Point2) -> Vec2 {
        match *self {
            DomainBoundary::Disk { center, .. } => p.sub(center).normalized(),
            DomainBoundary::RoundedRect { rect, corner_radius } => {
                let c = rect.center();
                let hx = 0.5 * rect.width() - corner_radius;
                let hy = 0.5 * rect.height() - corner_radius;
                let kx = num::clamp(p.x, c.x - hx, c.x + hx);
                let ky = num::clamp(p.y, c.y - hy, c.y + hy);
                let r = p.sub(Point2::new(kx, ky));
                if r.norm() > 0.0 {
                    r.normalized()
                } else {
                    let dx = hx + corner_radius - num::abs(p.x - c.x);
                    let dy = hy + corner_radius - num::abs(p.y - c.y);
                    if dx < dy {
                        Vec2::new(if p.x >= c.x { 1.0 } else { -1.0 }, 0.0)
                    } else {
                        Vec2::new(0.0, if p.y >= c.y { 1.0 } else { -1.0 })
                    }
                }
            }
        }
    }

    /// Gradient of the extended normal field `x ↦ ν(P(x))`: zero along flat
    /// boundary pieces, `(Id - r̂⊗r̂)/|x - c|` in the curved fans.
    fn grad_normal(&self, p: Point2) -> Mat2 {
        match *self {
            DomainBoundary::Disk { center, .. } => {
                let r = p.sub(center);
                let n = r.norm();
                let rh = r.scale(1.0 / n);
                Mat2::identity().sub(&Mat2::outer(rh, rh)).scaled(1.0 / n)
            }
            DomainBoundary::RoundedRect { rect, corner_radius } => {
                let c = rect.center();
                let hx = 0.5 * rect.width() - corner_radius;
                let hy = 0.5 * rect.height() - corner_radius;
                let kx = num::clamp(p.x, c.x - hx, c.x + hx);
                let ky = num::clamp(p.y, c.y - hy, c.y + hy);
                let r = p.sub(Point2::new(kx, ky));
                let n = r.norm();
                if n == 0.0 {
                    return Mat2::ZERO;
                }
                let interior_x = p.x > c.x - hx && p.x < c.x + hx;
                let interior_y = p.y > c.y - hy && p.y < c.y + hy;
                if interior_x || interior_y {
                    // Flat edge region: normal constant.
                    return Mat2::ZERO;
                }
                let rh = r.scale(1.0 / n);
                Mat2::identity().sub(&Mat2::outer(rh, rh)).scaled(1.0 / n)
            }
        }
    }

    /// Bounding rectangle of the inflated domain `Ω ∪ (∂Ω)_{margin}`.
    pub fn bounding_rect(&self, margin: f64) -> DomainRect {
        match *self {
            DomainBoundary::Disk { center, radius } => DomainRect::new(
                center.x - radius - margin,
                center.y - radius - margin,
                center.x + radius + margin,
                center.y + radius + margin,
            ),
            DomainBoundary::RoundedRect { rect, .. } => DomainRect::new(
                rect.x0 - margin,
                rect.y0 - margin,
                rect.x1 + margin,
                rect.y1 + margin,
            ),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.signed_dist(p) <= 0.0
    }
}

impl Mat2 {
    fn scaled(mut self, s: f64) -> Mat2 {
        for i in 0..2 {
            for j in 0..2 {
                self.m[i][j] *= s;
            }
        }
        self
    }
}

/// The boundary-fitted diffeomorphism pair of the thin-collar construction:
///
/// ```text
/// Φ_ε(x)    = x + ν(P(x)) (δ + dist(x,∂Ω))/δ · εL      on Ω ∩ (∂Ω)_δ
/// Φ_ε⁻¹(y)  = y - ν(P(y)) (δ + dist(y,∂Ω))/(δ+εL) · εL on Ω_ε ∩ (∂Ω)_δ
/// ```
///
/// both the identity deeper than δ inside. `Φ_ε` maps Ω onto the inflated
/// domain Ω_ε and `∂Ω` onto `∂Ω_ε`; the pair is exactly inverse and
/// `|∇Φ_ε - Id| ≤ Cε` with `C` depending on the domain, `L` and `δ` only.
#[derive(Clone)]
pub struct Diffeomorphism {
    pub boundary: DomainBoundary,
    pub eps: f64,
    pub l: f64,
    pub delta: f64,
}

impl Diffeomorphism {
    pub fn forward(&self, x: Point2) -> Point2 {
        let d = self.boundary.signed_dist(x);
        if d <= -self.delta {
            return x;
        }
        let nu = self.boundary.outward_normal(x);
        x.add(nu.scale((self.delta + d) / self.delta * self.eps * self.l))
    }

    pub fn inverse(&self, y: Point2) -> Point2 {
        let d = self.boundary.signed_dist(y);
        if d <= -self.delta {
            return y;
        }
        let nu = self.boundary.outward_normal(y);
        y.sub(nu.scale((self.delta + d) / (self.delta + self.eps * self.l) * self.eps * self.l))
    }

    /// Analytic `∇Φ_ε`.
    pub fn grad_forward(&self, x: Point2) -> Mat2 {
        let d = self.boundary.signed_dist(x);
        if d <= -self.delta {
            return Mat2::identity();
        }
        let el = self.eps * self.l;
        let nu = self.boundary.outward_normal(x);
        let gn = self.boundary.grad_normal(x).scaled((self.delta + d) / self.delta * el);
        let rank1 = Mat2::outer(nu, nu).scaled(el / self.delta);
        let mut r = Mat2::identity();
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] += gn.m[i][j] + rank1.m[i][j];
            }
        }
        r
    }

    /// `|det ∇Φ_ε⁻¹|` evaluated through the forward gradient.
    pub fn jacobian_inverse_det(&self, y: Point2) -> f64 {
        let x = self.inverse(y);
        1.0 / num::abs(self.grad_forward(x).det())
    }
}

/// Construct the diffeomorphism pair, validating the collar parameters.
pub fn boundary_diffeomorphism(
    boundary: DomainBoundary,
    eps: f64,
    l: f64,
    delta: f64,
) -> Result<Diffeomorphism> {
    if eps <= 0.0 || l <= 0.0 || delta <= 0.0 {
        return Err(Error::Parameter(String::from("eps, L and delta must be positive")));
    }
    if eps * l >= delta {
        return Err(Error::Parameter(String::from("need eps·L < delta")));
    }
    // The projection must be unique on (∂Ω)_δ: δ below the curvature radius.
    let reach = match boundary {
        DomainBoundary::Disk { radius, .. } => radius,
        DomainBoundary::RoundedRect { corner_radius, .. } => corner_radius,
    };
    if delta >= reach {
        return Err(Error::Parameter(String::from(
            "delta must stay below the boundary curvature radius",
        )));
    }
    Ok(Diffeomorphism { boundary, eps, l, delta })
}

/// `R(u, f)` over a C¹ boundary: the surface price of the trace mismatch,
/// integrated edge-by-edge (straight pieces) and arc-by-arc.
pub fn evaluate_r_on_boundary(
    boundary: &DomainBoundary,
    trace_u: &BoundaryTraceFn,
    f_datum: &BoundaryTraceFn,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> f64 {
    let (coef_a, coef_b) = coefficients(law);
    let integrand = |z: Point2, nu: Vec2| -> f64 {
        let jump = f_datum(z).sub(trace_u(z));
        if jump.norm() <= crate::sharp::TRACE_MISMATCH_TOL {
            return 0.0;
        }
        let dyad = SymMat2::sym_dyad(jump, nu);
        coef_a * num::sqrt(a.density(&dyad)) + coef_b + f.recession(z, dyad).unwrap_or(0.0)
    };
    match *boundary {
        DomainBoundary::Disk { center, radius } => num::integrate_1d(
            |phi| {
                let nu = Vec2::new(cos(phi), sin(phi));
                integrand(center.add(nu.scale(radius)), nu) * radius
            },
            0.0,
            2.0 * core::f64::consts::PI,
            64,
        ),
        DomainBoundary::RoundedRect { rect, corner_radius } => {
            let r = corner_radius;
            let mut total = 0.0;
            // Four straight edges.
            let edges = [
                (Point2::new(rect.x0 + r, rect.y0), Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0)),
                (Point2::new(rect.x1, rect.y0 + r), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)),
                (Point2::new(rect.x1 - r, rect.y1), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0)),
                (Point2::new(rect.x0, rect.y1 - r), Vec2::new(0.0, -1.0), Vec2::new(-1.0, 0.0)),
            ];
            let lens = [
                rect.width() - 2.0 * r,
                rect.height() - 2.0 * r,
                rect.width() - 2.0 * r,
                rect.height() - 2.0 * r,
            ];
            for ((start, dir, nu), len) in edges.into_iter().zip(lens) {
                total +=
                    num::integrate_1d(|s| integrand(start.add(dir.scale(s)), nu), 0.0, len, 16);
            }
            // Four corner arcs.
            let half_pi = 0.5 * core::f64::consts::PI;
            let corners = [
                (Point2::new(rect.x1 - r, rect.y0 + r), -half_pi),
                (Point2::new(rect.x1 - r, rect.y1 - r), 0.0),
                (Point2::new(rect.x0 + r, rect.y1 - r), half_pi),
                (Point2::new(rect.x0 + r, rect.y0 + r), 2.0 * half_pi),
            ];
            for (c, phi0) in corners {
                total += num::integrate_1d(
                    |phi| {
                        let nu = Vec2::new(cos(phi), sin(phi));
                        integrand(c.add(nu.scale(r)), nu) * r
                    },
                    phi0,
                    phi0 + half_pi,
                    8,
                );
            }
            total
        }
    }
}

#[cfg(feature = "std")]
fn cos(x: f64) -> f64 {
    x.cos()
}
#[cfg(not(feature = "std"))]
fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[cfg(feature = "std")]
fn sin(x: f64) -> f64 {
    x.sin()
}
#[cfg(not(feature = "std"))]
fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Recovery pair with exactly pinned boundary values.
#[derive(Clone)]
pub struct DatumRecovery {
    /// Recovery on the extended displacement (interior cracks plus the
    /// boundary mismatch segments).
    pub extended: RecoveryFields,
    pub diffeo: Diffeomorphism,
    pub boundary: DomainBoundary,
    pub f_datum: BoundaryTraceFn,
    /// Straight boundary pieces where the trace detaches from the datum.
    pub mismatch_segments: Vec<CrackSegment>,
}

impl DatumRecovery {
    pub fn u_value(&self, x: Point2) -> Vec2 {
        self.extended.u_value(self.diffeo.forward(x))
    }

    pub fn v(&self, x: Point2) -> f64 {
        self.extended.v(self.diffeo.forward(x))
    }

    pub fn grad_u(&self, x: Point2) -> Mat2 {
        let y = self.diffeo.forward(x);
        self.extended.grad_u(y).mul_mat(&self.diffeo.grad_forward(x))
    }

    pub fn strain(&self, x: Point2) -> SymMat2 {
        self.grad_u(x).sym()
    }
}

/// Detect per-edge mismatch intervals `{|trace - f| > tol}` on the straight
/// edges of a rounded rectangle, refining interval ends by bisection.
fn mismatch_segments_on_edges(
    boundary: &DomainBoundary,
    u: &CrackedDisplacement,
    f_datum: &BoundaryTraceFn,
) -> Result<Vec<CrackSegment>> {
    let (rect, r) = match *boundary {
        DomainBoundary::RoundedRect { rect, corner_radius } => (rect, corner_radius),
        DomainBoundary::Disk { center, radius } => {
            // Any mismatch on a disk boundary would need curved jump pieces.
            let mut probe = 0usize;
            for k in 0..256 {
                let phi = 2.0 * core::f64::consts::PI * k as f64 / 256.0;
                let z = center.add(Vec2::new(radius * cos(phi), radius * sin(phi)));
                let d = f_datum(z).sub(u.value(z)).norm();
                if d > crate::sharp::TRACE_MISMATCH_TOL {
                    probe += 1;
                }
            }
            if probe > 0 {
                return Err(Error::UnsupportedDomain(String::from(
                    "trace mismatch on a disk boundary needs curved jump pieces",
                )));
            }
            return Ok(Vec::new());
        }
    };
    let edges = [
        (Point2::new(rect.x0 + r, rect.y0), Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0), rect.width() - 2.0 * r),
        (Point2::new(rect.x1, rect.y0 + r), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0), rect.height() - 2.0 * r),
        (Point2::new(rect.x1 - r, rect.y1), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), rect.width() - 2.0 * r),
        (Point2::new(rect.x0, rect.y1 - r), Vec2::new(0.0, -1.0), Vec2::new(-1.0, 0.0), rect.height() - 2.0 * r),
    ];
    let mut segments = Vec::new();
    for (start, dir, nu, len) in edges {
        let mismatch_at = |s: f64| -> bool {
            let z = start.add(dir.scale(s));
            f_datum(z).sub(u.value(z)).norm() > crate::sharp::TRACE_MISMATCH_TOL
        };
        let n = 256;
        let mut s0: Option<f64> = None;
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for k in 0..=n {
            let s = len * k as f64 / n as f64;
            let m = mismatch_at(s);
            match (m, s0) {
                (true, None) => s0 = Some(s),
                (false, Some(a0)) => {
                    intervals.push((a0, s));
                    s0 = None;
                }
                _ => {}
            }
        }
        if let Some(a0) = s0 {
            intervals.push((a0, len));
        }
        for (lo, hi) in intervals {
            // Refine interval ends by bisection against the indicator.
            let refine = |mut inside: f64, mut outside: f64| -> f64 {
                for _ in 0..40 {
                    let mid = 0.5 * (inside + outside);
                    if mismatch_at(mid) {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                0.5 * (inside + outside)
            };
            let a0 = if lo <= 0.0 { 0.0 } else { refine(lo, lo - len / n as f64) };
            let b0 = if hi >= len { len } else { refine(hi - len / n as f64, hi) };
            if b0 - a0 > 1e-9 {
                segments.push(CrackSegment::new(
                    start.add(dir.scale(a0)),
                    start.add(dir.scale(b0)),
                    nu,
                )?);
            }
        }
    }
    Ok(segments)
}

/// Build the boundary-pinned recovery pair.
///
/// The collar width `δ` and push distance `L` are derived from the tube
/// profile so the pulled-back fields are exactly `f` and `1` on the
/// boundary: `εL` clears the widest tube.
pub fn build_recovery_with_datum(
    u: &CrackedDisplacement,
    f_datum: BoundaryTraceFn,
    boundary: DomainBoundary,
    eps: f64,
    a: &ElasticTensor,
    law: &DamageLaw,
    delta: f64,
) -> Result<DatumRecovery> {
    let mismatch = mismatch_segments_on_edges(&boundary, u, &f_datum)?;

    // Extended displacement: u inside Ω, f∘P outside.
    let margin = delta;
    let ext_rect = boundary.bounding_rect(margin);
    let b = boundary;
    let inner_field = u.field_fn();
    let datum = f_datum.clone();
    let ext_field: crate::sharp::FieldFn = Arc::new(move |p: Point2| {
        if b.signed_dist(p) <= 0.0 {
            inner_field(p)
        } else {
            datum(b.project(p))
        }
    });
    let inner_grad = u.grad_fn();
    let datum_g = f_datum.clone();
    let ext_grad: crate::sharp::GradFn = Arc::new(move |p: Point2| {
        if b.signed_dist(p) <= 0.0 {
            inner_grad(p)
        } else {
            // Gradient of f∘P by central differences; smooth off ∂Ω.
            let h = 1e-7;
            let fp = |q: Point2| datum_g(b.project(q));
            let fx1 = fp(Point2::new(p.x + h, p.y));
            let fx0 = fp(Point2::new(p.x - h, p.y));
            let fy1 = fp(Point2::new(p.x, p.y + h));
            let fy0 = fp(Point2::new(p.x, p.y - h));
            Mat2::new(
                (fx1.x - fx0.x) / (2.0 * h),
                (fy1.x - fy0.x) / (2.0 * h),
                (fx1.y - fx0.y) / (2.0 * h),
                (fy1.y - fy0.y) / (2.0 * h),
            )
        }
    });

    // Traces across the boundary mismatch segments: outer side is the datum,
    // inner side is the trace of u.
    let mut segments = u.segments.clone();
    let mut traces: Vec<TracePair> = Vec::new();
    for idx in 0..u.segments.len() {
        let uu = u.clone();
        let uu2 = u.clone();
        traces.push(TracePair {
            plus: Arc::new(move |s| uu.trace_plus(idx, s)),
            minus: Arc::new(move |s| uu2.trace_minus(idx, s)),
        });
    }
    for seg in &mismatch {
        let datum_t = f_datum.clone();
        let seg_p = seg.clone();
        let inner = u.field_fn();
        let seg_m = seg.clone();
        let off = 1e-7 * ext_rect.diameter();
        traces.push(TracePair {
            plus: Arc::new(move |s| datum_t(seg_p.point_at(s))),
            minus: Arc::new(move |s| inner(seg_m.point_at(s).sub(seg_m.normal.scale(off)))),
        });
        segments.push(seg.clone());
    }

    let sup = {
        // ‖û‖∞ ≤ max(‖u‖∞, ‖f‖∞); sample the datum around the boundary by
        // projecting a surrounding circle onto it.
        let mut m = u.sup_norm;
        let c = ext_rect.center();
        let big = ext_rect.diameter();
        for k in 0..720 {
            let phi = 2.0 * core::f64::consts::PI * k as f64 / 720.0;
            let p = c.add(Vec2::new(big * cos(phi), big * sin(phi)));
            m = num::max(m, f_datum(boundary.project(p)).norm());
        }
        m
    };
    let extended_u =
        CrackedDisplacement::new(ext_rect, segments, ext_field, Some(ext_grad), Some(traces), sup)?;

    let theta = optimal_theta(&extended_u, a, law)?;
    let extended = build_recovery(&extended_u, &theta, eps, law)?;

    // Push distance: the boundary collar must clear the widest tube.
    let l = theta.sup + 2.0;
    if eps * l >= delta {
        return Err(Error::Parameter(String::from(
            "eps too large for the collar: need eps (theta_sup + 2) < delta",
        )));
    }
    let diffeo = boundary_diffeomorphism(boundary, eps, l, delta)?;
    Ok(DatumRecovery { extended, diffeo, boundary, f_datum, mismatch_segments: mismatch })
}

const SLAB_CROSS_PANELS: usize = 6;
const SLAB_ALONG_PANELS: usize = 24;
const FAN_RHO_PANELS: usize = 6;
const FAN_PHI_PANELS: usize = 12;

/// Energy of the pinned pair over Ω, computed on the inflated domain after
/// the exact change of variables `x = Φ_ε⁻¹(y)`:
///
/// `F_ε(u_ε, v_ε; Ω) = ∫_{Ω_ε} |det ∇Φ_ε⁻¹| [ v̂ 𝔸 ẽ·ẽ + ψ(v̂)/ε + F(Φ⁻¹, ẽ, v̂) ]`
///
/// with `ẽ = sym(∇û_ε(y) ∇Φ_ε(Φ⁻¹(y)))`. The inflated rounded rectangle
/// splits exactly into a central rectangle, four edge slabs and four corner
/// fans; panel boundaries are fitted to the tube bands and the collar kink.
pub fn evaluate_f_eps_with_datum(
    rec: &DatumRecovery,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> Result<RecoveryEnergy> {
    let (rect, r) = match rec.boundary {
        DomainBoundary::RoundedRect { rect, corner_radius } => (rect, corner_radius),
        DomainBoundary::Disk { .. } => {
            return evaluate_datum_on_disk(rec, a, law, f);
        }
    };
    let eps = rec.extended.eps;
    let el = eps * rec.diffeo.l;
    let delta = rec.diffeo.delta;

    let mut acc = RecoveryEnergy::default();
    let add = |acc: &mut RecoveryEnergy, y: Point2, w: f64| {
        let xin = rec.diffeo.inverse(y);
        let det = num::abs(rec.diffeo.grad_forward(xin).det());
        let jac = w / det;
        let strain = rec.extended.grad_u(y).mul_mat(&rec.diffeo.grad_forward(xin)).sym();
        let v = rec.extended.v(y);
        acc.elastic += jac * v * a.density(&strain);
        acc.damage += jac * law.psi(v) / eps;
        acc.potential += jac * f.eval(xin, strain, v);
    };

    // Fitted 1D breakpoints across an edge slab: collar kink at depth δ,
    // boundary line, tube bands around the edge mismatch tube.
    let cross_breaks = |lo: f64, hi: f64, edge: f64, tube: Option<f64>| -> Vec<f64> {
        let mut b = alloc::vec![lo, hi];
        for cand in [
            edge - delta,
            edge,
            tube.map(|w| edge - w).unwrap_or(f64::NAN),
            tube.map(|w| edge + w).unwrap_or(f64::NAN),
        ] {
            if cand.is_finite() && cand > lo + 1e-12 && cand < hi - 1e-12 {
                b.push(cand);
            }
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b
    };
    // Maximum tube half-width over the extended profile.
    let tube_w = (rec.extended.theta.sup + rec.extended.c_eps) * eps;

    let cx0 = rect.x0 + r;
    let cx1 = rect.x1 - r;
    let cy0 = rect.y0 + r;
    let cy1 = rect.y1 - r;

    // Central rectangle: Φ = id there provided δ + εL stays inside the
    // corner margin; enforced by construction (δ < r).
    {
        let central = DomainRect::new(cx0, cy0, cx1, cy1);
        let inner = super::evaluate_f_eps(&rec.extended, a, law, f, &central)?;
        acc.elastic += inner.elastic;
        acc.damage += inner.damage;
        acc.potential += inner.potential;
    }

    // Four edge slabs of the inflated domain.
    struct Slab {
        horizontal: bool,
        cross_lo: f64,
        cross_hi: f64,
        edge: f64,
        along_lo: f64,
        along_hi: f64,
    }
    let slabs = [
        Slab { horizontal: false, cross_lo: rect.x0 - el, cross_hi: cx0, edge: rect.x0, along_lo: cy0, along_hi: cy1 },
        Slab { horizontal: false, cross_lo: cx1, cross_hi: rect.x1 + el, edge: rect.x1, along_lo: cy0, along_hi: cy1 },
        Slab { horizontal: true, cross_lo: rect.y0 - el, cross_hi: cy0, edge: rect.y0, along_lo: cx0, along_hi: cx1 },
        Slab { horizontal: true, cross_lo: cy1, cross_hi: rect.y1 + el, edge: rect.y1, along_lo: cx0, along_hi: cx1 },
    ];
    for slab in slabs {
        let breaks =
            cross_breaks(slab.cross_lo, slab.cross_hi, slab.edge, Some(tube_w));
        for bw in breaks.windows(2) {
            let (c0, c1) = (bw[0], bw[1]);
            for pc in 0..SLAB_CROSS_PANELS {
                let p0 = c0 + (c1 - c0) * pc as f64 / SLAB_CROSS_PANELS as f64;
                let p1 = c0 + (c1 - c0) * (pc + 1) as f64 / SLAB_CROSS_PANELS as f64;
                for pa in 0..SLAB_ALONG_PANELS {
                    let a0 = slab.along_lo
                        + (slab.along_hi - slab.along_lo) * pa as f64 / SLAB_ALONG_PANELS as f64;
                    let a1 = slab.along_lo
                        + (slab.along_hi - slab.along_lo) * (pa + 1) as f64
                            / SLAB_ALONG_PANELS as f64;
                    for &(gx, wx) in num::GAUSS3.iter() {
                        for &(gy, wy) in num::GAUSS3.iter() {
                            let cross = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * gx;
                            let along = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * gy;
                            let w = 0.25 * (p1 - p0) * (a1 - a0) * wx * wy;
                            let pt = if slab.horizontal {
                                Point2::new(along, cross)
                            } else {
                                Point2::new(cross, along)
                            };
                            add(&mut acc, pt, w);
                        }
                    }
                }
            }
        }
    }

    // Four corner fans (polar panels around each corner center), radius
    // r + εL, with radial breaks at the collar kink r - δ and at r.
    let half_pi = 0.5 * core::f64::consts::PI;
    let corners = [
        (Point2::new(cx1, cy0), -half_pi),
        (Point2::new(cx1, cy1), 0.0),
        (Point2::new(cx0, cy1), half_pi),
        (Point2::new(cx0, cy0), 2.0 * half_pi),
    ];
    for (c, phi0) in corners {
        let mut rho_breaks = alloc::vec![0.0, r - delta, r, r + el];
        rho_breaks.retain(|&x| x >= 0.0);
        rho_breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for rb in rho_breaks.windows(2) {
            let (r0, r1) = (rb[0], rb[1]);
            if r1 - r0 < 1e-14 {
                continue;
            }
            for pr in 0..FAN_RHO_PANELS {
                let q0 = r0 + (r1 - r0) * pr as f64 / FAN_RHO_PANELS as f64;
                let q1 = r0 + (r1 - r0) * (pr + 1) as f64 / FAN_RHO_PANELS as f64;
                for pp in 0..FAN_PHI_PANELS {
                    let f0 = phi0 + half_pi * pp as f64 / FAN_PHI_PANELS as f64;
                    let f1 = phi0 + half_pi * (pp + 1) as f64 / FAN_PHI_PANELS as f64;
                    for &(gr, wr) in num::GAUSS3.iter() {
                        for &(gp, wp) in num::GAUSS3.iter() {
                            let rho = 0.5 * (q0 + q1) + 0.5 * (q1 - q0) * gr;
                            let phi = 0.5 * (f0 + f1) + 0.5 * (f1 - f0) * gp;
                            let w = 0.25 * (q1 - q0) * (f1 - f0) * wr * wp * rho;
                            add(&mut acc, c.add(Vec2::new(rho * cos(phi), rho * sin(phi))), w);
                        }
                    }
                }
            }
        }
    }

    acc.total = acc.elastic + acc.damage + acc.potential;
    Ok(acc)
}

/// Disk variant: polar quadrature on the inflated disk (no boundary
/// mismatch segments are possible here).
fn evaluate_datum_on_disk(
    rec: &DatumRecovery,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> Result<RecoveryEnergy> {
    let (center, radius) = match rec.boundary {
        DomainBoundary::Disk { center, radius } => (center, radius),
        _ => unreachable!(),
    };
    let eps = rec.extended.eps;
    let el = eps * rec.diffeo.l;
    let delta = rec.diffeo.delta;
    let mut elastic = 0.0;
    let mut damage = 0.0;
    let mut potential = 0.0;
    let rho_breaks = alloc::vec![0.0, radius - delta, radius, radius + el];
    for rb in rho_breaks.windows(2) {
        let (r0, r1) = (rb[0], rb[1]);
        let panels = 16;
        for pr in 0..panels {
            let q0 = r0 + (r1 - r0) * pr as f64 / panels as f64;
            let q1 = r0 + (r1 - r0) * (pr + 1) as f64 / panels as f64;
            for pp in 0..48 {
                let f0 = 2.0 * core::f64::consts::PI * pp as f64 / 48.0;
                let f1 = 2.0 * core::f64::consts::PI * (pp + 1) as f64 / 48.0;
                for &(gr, wr) in num::GAUSS3.iter() {
                    for &(gp, wp) in num::GAUSS3.iter() {
                        let rho = 0.5 * (q0 + q1) + 0.5 * (q1 - q0) * gr;
                        let phi = 0.5 * (f0 + f1) + 0.5 * (f1 - f0) * gp;
                        let w = 0.25 * (q1 - q0) * (f1 - f0) * wr * wp * rho;
                        let y = center.add(Vec2::new(rho * cos(phi), rho * sin(phi)));
                        let xin = rec.diffeo.inverse(y);
                        let det = num::abs(rec.diffeo.grad_forward(xin).det());
                        let strain =
                            rec.extended.grad_u(y).mul_mat(&rec.diffeo.grad_forward(xin)).sym();
                        let v = rec.extended.v(y);
                        elastic += w / det * v * a.density(&strain);
                        damage += w / det * law.psi(v) / eps;
                        potential += w / det * f.eval(xin, strain, v);
                    }
                }
            }
        }
    }
    Ok(RecoveryEnergy { elastic, damage, potential, total: elastic + damage + potential })
}
