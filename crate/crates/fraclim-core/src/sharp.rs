//! Explicitly cracked displacements and their sharp energy.
//!
//! A [`CrackedDisplacement`] is a piecewise-smooth field on a rectangle whose
//! jump set is a finite union of pairwise disjoint straight segments, each
//! carrying sided traces. [`evaluate_phi`] integrates the limit energy
//!
//! ```text
//! Φ(u) = ∫ 𝔸e(u)·e(u) + ∫ F(x, e(u), 1)
//!      + a ∫_{J_u} √(𝔸([u]⊙ν)·([u]⊙ν)) + b H¹(J_u) + ∫_{J_u} F_∞(z, [u]⊙ν)
//! ```
//!
//! and [`evaluate_r`] the boundary relaxation paid where the trace detaches
//! from a Dirichlet datum.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{segment_segment_distance, DomainRect, Point2, Vec2};
use crate::material::{coefficients, DamageLaw, ElasticTensor};
use crate::num;
use crate::potential::PotentialSpec;
use crate::tensor::{Mat2, SymMat2};

pub type FieldFn = Arc<dyn Fn(Point2) -> Vec2 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(Point2) -> Mat2 + Send + Sync>;
pub type TraceFn = Arc<dyn Fn(f64) -> Vec2 + Send + Sync>;
pub type BoundaryTraceFn = Arc<dyn Fn(Point2) -> Vec2 + Send + Sync>;

/// One straight piece of the jump set with a fixed unit normal.
#[derive(Clone)]
pub struct CrackSegment {
    pub a: Point2,
    pub b: Point2,
    pub normal: Vec2,
}

impl CrackSegment {
    pub fn new(a: Point2, b: Point2, normal: Vec2) -> Result<Self> {
        let dir = b.sub(a);
        let len = dir.norm();
        if len <= 0.0 {
            return Err(Error::InvalidInput(String::from("crack segment has zero length")));
        }
        if num::abs(normal.norm() - 1.0) > 1e-12 {
            return Err(Error::InvalidInput(String::from("crack normal must be unit length")));
        }
        if num::abs(normal.dot(dir)) > 1e-12 * len {
            return Err(Error::InvalidInput(String::from(
                "crack normal must be orthogonal to the segment",
            )));
        }
        Ok(CrackSegment { a, b, normal })
    }

    /// Segment with the normal chosen as the left-hand perpendicular.
    pub fn with_default_normal(a: Point2, b: Point2) -> Result<Self> {
        let t = b.sub(a).normalized();
        CrackSegment::new(a, b, t.perp())
    }

    pub fn length(&self) -> f64 {
        self.b.sub(self.a).norm()
    }

    pub fn tangent(&self) -> Vec2 {
        self.b.sub(self.a).normalized()
    }

    /// Point at arclength `s ∈ [0, length]`.
    pub fn point_at(&self, s: f64) -> Point2 {
        self.a.add(self.tangent().scale(s))
    }
}

/// Sided traces along one segment, parametrized by arclength.
#[derive(Clone)]
pub struct TracePair {
    pub plus: TraceFn,
    pub minus: TraceFn,
}

/// A displacement that is smooth on the complement of its polyline jump set.
#[derive(Clone)]
pub struct CrackedDisplacement {
    pub domain: DomainRect,
    pub segments: Vec<CrackSegment>,
    field: FieldFn,
    grad: GradFn,
    traces: Vec<TracePair>,
    /// Registered `‖u‖_∞` bound.
    pub sup_norm: f64,
}

impl CrackedDisplacement {
    /// Assemble a cracked displacement.
    ///
    /// The field closure must be evaluable everywhere off the jump set (it is
    /// what defines the pieces); the gradient defaults to central finite
    /// differences of the field and the traces default to two-sided limits
    /// along each segment normal.
    pub fn new(
        domain: DomainRect,
        segments: Vec<CrackSegment>,
        field: FieldFn,
        grad: Option<GradFn>,
        traces: Option<Vec<TracePair>>,
        sup_norm: f64,
    ) -> Result<Self> {
        for i in 0..segments.len() {
            for j in (i + 1)..segments.len() {
                let d = segment_segment_distance(
                    segments[i].a,
                    segments[i].b,
                    segments[j].a,
                    segments[j].b,
                );
                if d <= 0.0 {
                    return Err(Error::InvalidInput(String::from(
                        "crack segments must be pairwise disjoint",
                    )));
                }
            }
        }
        let grad = grad.unwrap_or_else(|| {
            let f = field.clone();
            let h = 1e-6 * domain.diameter();
            Arc::new(move |p: Point2| fd_gradient(&f, p, h))
        });
        let traces = match traces {
            Some(t) => {
                if t.len() != segments.len() {
                    return Err(Error::InvalidInput(String::from(
                        "one trace pair per segment required",
                    )));
                }
                t
            }
            None => {
                let off = 1e-7 * domain.diameter();
                segments
                    .iter()
                    .map(|s| {
                        let f_plus = field.clone();
                        let f_minus = field.clone();
                        let seg = s.clone();
                        let seg2 = s.clone();
                        TracePair {
                            plus: Arc::new(move |z: f64| {
                                f_plus(seg.point_at(z).add(seg.normal.scale(off)))
                            }),
                            minus: Arc::new(move |z: f64| {
                                f_minus(seg2.point_at(z).sub(seg2.normal.scale(off)))
                            }),
                        }
                    })
                    .collect()
            }
        };
        Ok(CrackedDisplacement { domain, segments, field, grad, traces, sup_norm })
    }

    pub fn value(&self, p: Point2) -> Vec2 {
        (self.field)(p)
    }

    pub fn gradient(&self, p: Point2) -> Mat2 {
        (self.grad)(p)
    }

    pub fn strain(&self, p: Point2) -> SymMat2 {
        self.gradient(p).sym()
    }

    pub fn trace_plus(&self, seg: usize, s: f64) -> Vec2 {
        (self.traces[seg].plus)(s)
    }

    pub fn trace_minus(&self, seg: usize, s: f64) -> Vec2 {
        (self.traces[seg].minus)(s)
    }

    /// Jump `[u](s) = u⁺(s) - u⁻(s)` along segment `seg`.
    pub fn jump(&self, seg: usize, s: f64) -> Vec2 {
        self.trace_plus(seg, s).sub(self.trace_minus(seg, s))
    }

    pub fn field_fn(&self) -> FieldFn {
        self.field.clone()
    }

    pub fn grad_fn(&self) -> GradFn {
        self.grad.clone()
    }

    /// Restrict to a subrectangle, keeping only the segments inside it.
    pub fn restricted(&self, sub: DomainRect) -> Result<CrackedDisplacement> {
        let mut segs = Vec::new();
        let mut traces = Vec::new();
        for (s, t) in self.segments.iter().zip(self.traces.iter()) {
            if sub.contains(s.a) && sub.contains(s.b) {
                segs.push(s.clone());
                traces.push(t.clone());
            }
        }
        CrackedDisplacement::new(
            sub,
            segs,
            self.field.clone(),
            Some(self.grad.clone()),
            Some(traces),
            self.sup_norm,
        )
    }
}

fn fd_gradient(f: &FieldFn, p: Point2, h: f64) -> Mat2 {
    let fx1 = f(Point2::new(p.x + h, p.y));
    let fx0 = f(Point2::new(p.x - h, p.y));
    let fy1 = f(Point2::new(p.x, p.y + h));
    let fy0 = f(Point2::new(p.x, p.y - h));
    Mat2::new(
        (fx1.x - fx0.x) / (2.0 * h),
        (fy1.x - fy0.x) / (2.0 * h),
        (fx1.y - fx0.y) / (2.0 * h),
        (fy1.y - fy0.y) / (2.0 * h),
    )
}

/// Split of the sharp energy into its five terms plus the boundary
/// relaxation; `total` is their exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SharpEnergyBreakdown {
    pub bulk_elastic: f64,
    pub bulk_potential: f64,
    pub surface_a: f64,
    pub surface_b: f64,
    pub surface_f_inf: f64,
    pub boundary_r: f64,
    pub total: f64,
}

impl SharpEnergyBreakdown {
    fn with_total(mut self) -> Self {
        self.total = self.bulk_elastic
            + self.bulk_potential
            + self.surface_a
            + self.surface_b
            + self.surface_f_inf
            + self.boundary_r;
        self
    }
}

const BULK_BASE_CELLS: usize = 8;
const BULK_MAX_LEVELS: usize = 12;
const BULK_REL_TOL: f64 = 1e-8;

/// Integrate `g(x)` over the domain minus the jump set by tensor-product
/// 3x3 Gauss cells, excluding a one-cell tube around the segments and
/// refining the excluded band until the increment drops below `1e-8`
/// relative.
pub fn bulk_quadrature<G: Fn(Point2) -> f64>(
    domain: &DomainRect,
    segments: &[CrackSegment],
    g: G,
) -> Result<f64> {
    let base = num::min(domain.width(), domain.height()) / BULK_BASE_CELLS as f64;
    let nx = num::max((domain.width() / base) as f64, 1.0) as usize;
    let ny = num::max((domain.height() / base) as f64, 1.0) as usize;
    let hx0 = domain.width() / nx as f64;
    let hy0 = domain.height() / ny as f64;

    let dist_to_cracks = |p: Point2| -> f64 {
        let mut d = f64::INFINITY;
        for s in segments {
            d = num::min(d, crate::geometry::dist_to_segment(s.a, s.b, p));
        }
        d
    };

    // Cells are (x0, y0, hx, hy); a cell is kept when its center clears the
    // one-cell tube, which guarantees the cell cannot intersect a segment.
    let mut pending: Vec<(f64, f64, f64, f64)> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            pending.push((
                domain.x0 + hx0 * i as f64,
                domain.y0 + hy0 * j as f64,
                hx0,
                hy0,
            ));
        }
    }

    let mut total = 0.0;
    let mut last_increment = f64::INFINITY;
    let mut prev_total = 0.0;
    for _level in 0..=BULK_MAX_LEVELS {
        let mut contributions = Vec::new();
        let mut next = Vec::new();
        for &(x0, y0, hx, hy) in &pending {
            let center = Point2::new(x0 + 0.5 * hx, y0 + 0.5 * hy);
            let tube = num::max(hx, hy);
            if segments.is_empty() || dist_to_cracks(center) > tube {
                let mut acc = 0.0;
                for &(gx, wx) in num::GAUSS3.iter() {
                    for &(gy, wy) in num::GAUSS3.iter() {
                        let p = Point2::new(
                            center.x + 0.5 * hx * gx,
                            center.y + 0.5 * hy * gy,
                        );
                        acc += wx * wy * g(p);
                    }
                }
                contributions.push(acc * 0.25 * hx * hy);
            } else {
                let hx2 = 0.5 * hx;
                let hy2 = 0.5 * hy;
                next.push((x0, y0, hx2, hy2));
                next.push((x0 + hx2, y0, hx2, hy2));
                next.push((x0, y0 + hy2, hx2, hy2));
                next.push((x0 + hx2, y0 + hy2, hx2, hy2));
            }
        }
        let increment = num::pairwise_sum(&mut contributions);
        prev_total = total;
        total += increment;
        last_increment = increment;
        pending = next;
        if pending.is_empty() || num::abs(increment) <= BULK_REL_TOL * (num::abs(total) + 1.0) {
            return Ok(total);
        }
    }
    Err(Error::QuadratureNotConverged { last: total, previous: prev_total + last_increment })
}

/// 16-point Gauss line quadrature of `g(s)` over a segment's arclength.
pub fn segment_quadrature<G: Fn(f64) -> f64>(seg: &CrackSegment, g: G) -> f64 {
    let len = seg.length();
    let mid = 0.5 * len;
    let half = 0.5 * len;
    let mut acc = 0.0;
    for &(x, w) in num::GAUSS16.iter() {
        acc += w * g(mid + half * x);
    }
    acc * half
}

/// Sharp limit energy `Φ(u)` of a cracked displacement.
pub fn evaluate_phi(
    u: &CrackedDisplacement,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> Result<SharpEnergyBreakdown> {
    let (coef_a, coef_b) = coefficients(law);

    let bulk_elastic = bulk_quadrature(&u.domain, &u.segments, |p| a.density(&u.strain(p)))?;
    let bulk_potential =
        bulk_quadrature(&u.domain, &u.segments, |p| f.eval(p, u.strain(p), 1.0))?;

    let mut surface_a = 0.0;
    let mut surface_b = 0.0;
    let mut surface_f_inf = 0.0;
    for (idx, seg) in u.segments.iter().enumerate() {
        surface_b += coef_b * seg.length();
        surface_a += coef_a
            * segment_quadrature(seg, |s| {
                let d = SymMat2::sym_dyad(u.jump(idx, s), seg.normal);
                num::sqrt(a.density(&d))
            });
        surface_f_inf += segment_quadrature(seg, |s| {
            let z = seg.point_at(s);
            let d = SymMat2::sym_dyad(u.jump(idx, s), seg.normal);
            match f.recession(z, d) {
                Some(v) => v,
                None => 0.0,
            }
        });
    }

    Ok(SharpEnergyBreakdown {
        bulk_elastic,
        bulk_potential,
        surface_a,
        surface_b,
        surface_f_inf,
        boundary_r: 0.0,
        total: 0.0,
    }
    .with_total())
}

/// Mismatch threshold for detecting `{u ≠ f}` on the boundary quadrature mesh.
pub const TRACE_MISMATCH_TOL: f64 = 1e-9;

/// Boundary relaxation
/// `R(u, f) = ∫_{∂Ω} F_∞(z, [u-f]⊙ν) + b H¹({u ≠ f}) + a ∫ √(𝔸([u-f]⊙ν)·([u-f]⊙ν))`
/// with the outward normal and the jump oriented as `f - trace(u)`.
pub fn evaluate_r(
    u: &CrackedDisplacement,
    f_datum: &BoundaryTraceFn,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> f64 {
    let (coef_a, coef_b) = coefficients(law);
    let d = &u.domain;
    // Edges with outward normals, counter-clockwise.
    let edges = [
        (Point2::new(d.x0, d.y0), Point2::new(d.x1, d.y0), Vec2::new(0.0, -1.0)),
        (Point2::new(d.x1, d.y0), Point2::new(d.x1, d.y1), Vec2::new(1.0, 0.0)),
        (Point2::new(d.x1, d.y1), Point2::new(d.x0, d.y1), Vec2::new(0.0, 1.0)),
        (Point2::new(d.x0, d.y1), Point2::new(d.x0, d.y0), Vec2::new(-1.0, 0.0)),
    ];
    let mut total = 0.0;
    for (p0, p1, nu) in edges {
        let dir = p1.sub(p0);
        let len = dir.norm();
        let t = dir.normalized();
        // Split the edge where crack segments touch it so quadrature nodes
        // never straddle a trace discontinuity.
        let mut splits = alloc::vec![0.0, len];
        for seg in &u.segments {
            for q in [seg.a, seg.b] {
                let s = q.sub(p0).dot(t);
                let on_edge = q.sub(p0.add(t.scale(s))).norm() < 1e-12 && s > 1e-12 && s < len - 1e-12;
                if on_edge {
                    splits.push(s);
                }
            }
        }
        splits.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in splits.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 - s0 < 1e-14 {
                continue;
            }
            let mid = 0.5 * (s0 + s1);
            let half = 0.5 * (s1 - s0);
            let mut acc = 0.0;
            for &(x, wgt) in num::GAUSS16.iter() {
                let z = p0.add(t.scale(mid + half * x));
                let jump = f_datum(z).sub(u.value(z));
                if jump.norm() > TRACE_MISMATCH_TOL {
                    let dyad = SymMat2::sym_dyad(jump, nu);
                    let f_inf = f.recession(z, dyad).unwrap_or(0.0);
                    acc += wgt * (coef_a * num::sqrt(a.density(&dyad)) + coef_b + f_inf);
                }
            }
            total += acc * half;
        }
    }
    total
}

/// `Φ(u) + R(u, f)` when a datum is supplied; the reference value for
/// sharp-limit candidates of the Dirichlet minimum problem.
pub fn sharp_total(
    u: &CrackedDisplacement,
    f_datum: Option<&BoundaryTraceFn>,
    a: &ElasticTensor,
    law: &DamageLaw,
    f: &PotentialSpec,
) -> Result<SharpEnergyBreakdown> {
    let mut breakdown = evaluate_phi(u, a, law, f)?;
    if let Some(datum) = f_datum {
        breakdown.boundary_r = evaluate_r(u, datum, a, law, f);
    }
    Ok(breakdown.with_total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_fracking, PressureLaw, SpatialField};
    use alloc::vec;

    fn unit_square() -> DomainRect {
        DomainRect::unit()
    }

    /// The flagship example: unit square, full vertical crack at x = 0.5,
    /// u = 0 on the left piece and (delta, 0) on the right.
    pub(crate) fn vertical_crack(delta: f64) -> CrackedDisplacement {
        let seg = CrackSegment::new(
            Point2::new(0.5, 0.0),
            Point2::new(0.5, 1.0),
            Vec2::new(1.0, 0.0),
        )
        .unwrap();
        CrackedDisplacement::new(
            unit_square(),
            vec![seg],
            Arc::new(move |p: Point2| {
                if p.x > 0.5 {
                    Vec2::new(delta, 0.0)
                } else {
                    Vec2::ZERO
                }
            }),
            Some(Arc::new(|_| Mat2::ZERO)),
            None,
            delta,
        )
        .unwrap()
    }

    #[test]
    fn segment_validation() {
        assert!(CrackSegment::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0)
        )
        .is_ok());
        // Non-unit normal.
        assert!(CrackSegment::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Vec2::new(0.0, 2.0)
        )
        .is_err());
        // Normal not orthogonal.
        assert!(CrackSegment::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0)
        )
        .is_err());
        // Zero length.
        assert!(CrackSegment::new(
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 0.5),
            Vec2::new(0.0, 1.0)
        )
        .is_err());
    }

    #[test]
    fn overlapping_segments_rejected() {
        let s1 = CrackSegment::with_default_normal(Point2::new(0.2, 0.5), Point2::new(0.8, 0.5))
            .unwrap();
        let s2 = CrackSegment::with_default_normal(Point2::new(0.5, 0.2), Point2::new(0.5, 0.8))
            .unwrap();
        let r = CrackedDisplacement::new(
            unit_square(),
            vec![s1, s2],
            Arc::new(|_| Vec2::ZERO),
            None,
            None,
            0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_displacement_has_zero_energy() {
        let u = CrackedDisplacement::new(
            unit_square(),
            vec![],
            Arc::new(|_| Vec2::ZERO),
            None,
            None,
            0.0,
        )
        .unwrap();
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let phi = evaluate_phi(&u, &a, &law, &PotentialSpec::zero()).unwrap();
        assert_eq!(phi.total, 0.0);
    }

    #[test]
    fn vertical_crack_energy_matches_hand_value() {
        let u = vertical_crack(1.0);
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let phi = evaluate_phi(&u, &a, &law, &PotentialSpec::zero()).unwrap();
        // a·δ·len + b·len = 2 + 2/3; bulk vanishes since e(u) = 0.
        assert!(num::abs(phi.bulk_elastic) < 1e-12);
        assert!(num::abs(phi.surface_a - 2.0) < 1e-10);
        assert!(num::abs(phi.surface_b - 2.0 / 3.0) < 1e-12);
        assert!(num::abs(phi.total - (2.0 + 2.0 / 3.0)) < 1e-10);
    }

    #[test]
    fn vertical_crack_with_fracking_adds_recession_term() {
        let u = vertical_crack(1.0);
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let f = make_fracking(PressureLaw::AffineInV {
            m: 0.0,
            q: 1.0,
            rho: SpatialField::constant(0.1),
        });
        let phi = evaluate_phi(&u, &a, &law, &f).unwrap();
        assert!(num::abs(phi.surface_f_inf - (-0.1)) < 1e-12);
        assert!(num::abs(phi.bulk_potential) < 1e-12);
        assert!(num::abs(phi.total - (2.0 + 2.0 / 3.0 - 0.1)) < 1e-10);
    }

    #[test]
    fn quadrature_oracle_polynomial_bulk() {
        // u = (x², x·y): e(u) = [[2x, (x+y)/2·… ]] — closed forms below.
        let u = CrackedDisplacement::new(
            unit_square(),
            vec![],
            Arc::new(|p: Point2| Vec2::new(p.x * p.x, p.x * p.y)),
            Some(Arc::new(|p: Point2| Mat2::new(2.0 * p.x, 0.0, p.y, p.x))),
            None,
            2.0,
        )
        .unwrap();
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let phi = evaluate_phi(&u, &a, &law, &PotentialSpec::zero()).unwrap();
        // e(u) = [[2x, y/2], [y/2, x]]; |e|² = 4x² + x² + y²/2.
        // ∫₀¹∫₀¹ (5x² + y²/2) = 5/3 + 1/6 = 11/6.
        assert!(num::abs(phi.bulk_elastic - 11.0 / 6.0) < 1e-10);
    }

    #[test]
    fn surface_terms_one_homogeneous_in_jump() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let p1 = evaluate_phi(&vertical_crack(1.0), &a, &law, &PotentialSpec::zero()).unwrap();
        let p2 = evaluate_phi(&vertical_crack(2.0), &a, &law, &PotentialSpec::zero()).unwrap();
        assert!(num::abs(p2.surface_a - 2.0 * p1.surface_a) < 1e-10);
        assert!(num::abs(p2.surface_b - p1.surface_b) < 1e-14);
    }

    #[test]
    fn additive_over_split_domains() {
        let u = vertical_crack(1.0);
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let whole = evaluate_phi(&u, &a, &law, &PotentialSpec::zero()).unwrap();
        // Bottom and top halves each contain a whole segment after splitting
        // the crack into two stacked segments.
        let mk = |y0: f64, y1: f64| {
            let seg = CrackSegment::new(
                Point2::new(0.5, y0),
                Point2::new(0.5, y1),
                Vec2::new(1.0, 0.0),
            )
            .unwrap();
            CrackedDisplacement::new(
                DomainRect::new(0.0, y0, 1.0, y1),
                vec![seg],
                u.field_fn(),
                Some(u.grad_fn()),
                None,
                1.0,
            )
            .unwrap()
        };
        let bottom = evaluate_phi(&mk(0.0, 0.5), &a, &law, &PotentialSpec::zero()).unwrap();
        let top = evaluate_phi(&mk(0.5, 1.0), &a, &law, &PotentialSpec::zero()).unwrap();
        assert!(num::abs(whole.total - bottom.total - top.total) < 1e-9);
    }

    #[test]
    fn frame_consistency_under_orientation_flip() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let delta = 1.0;
        let flipped_seg = CrackSegment::new(
            Point2::new(0.5, 0.0),
            Point2::new(0.5, 1.0),
            Vec2::new(-1.0, 0.0),
        )
        .unwrap();
        let flipped = CrackedDisplacement::new(
            unit_square(),
            vec![flipped_seg],
            Arc::new(move |p: Point2| {
                if p.x > 0.5 {
                    Vec2::new(delta, 0.0)
                } else {
                    Vec2::ZERO
                }
            }),
            Some(Arc::new(|_| Mat2::ZERO)),
            None,
            delta,
        )
        .unwrap();
        let base = evaluate_phi(&vertical_crack(delta), &a, &law, &PotentialSpec::zero()).unwrap();
        let flip = evaluate_phi(&flipped, &a, &law, &PotentialSpec::zero()).unwrap();
        assert!(num::abs(base.total - flip.total) < 1e-10);
    }

    #[test]
    fn boundary_relaxation_values() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let zero_u = CrackedDisplacement::new(
            unit_square(),
            vec![],
            Arc::new(|_| Vec2::ZERO),
            Some(Arc::new(|_| Mat2::ZERO)),
            None,
            0.0,
        )
        .unwrap();
        // Matching trace: R = 0.
        let matching: BoundaryTraceFn = Arc::new(|_| Vec2::ZERO);
        assert_eq!(evaluate_r(&zero_u, &matching, &a, &law, &PotentialSpec::zero()), 0.0);

        // f = (delta, 0) on the right edge only: R = a·δ + b over that edge.
        let delta = 0.7;
        let datum: BoundaryTraceFn = Arc::new(move |p: Point2| {
            if p.x > 1.0 - 1e-12 {
                Vec2::new(delta, 0.0)
            } else {
                Vec2::ZERO
            }
        });
        let r = evaluate_r(&zero_u, &datum, &a, &law, &PotentialSpec::zero());
        let expected = 2.0 * delta + 2.0 / 3.0;
        assert!(num::abs(r - expected) < 1e-10, "r = {r}, expected {expected}");

        // Scaling the mismatch scales the a-term, fixes the b-term.
        let datum2: BoundaryTraceFn = Arc::new(move |p: Point2| {
            if p.x > 1.0 - 1e-12 {
                Vec2::new(2.0 * delta, 0.0)
            } else {
                Vec2::ZERO
            }
        });
        let r2 = evaluate_r(&zero_u, &datum2, &a, &law, &PotentialSpec::zero());
        assert!(num::abs(r2 - (4.0 * delta + 2.0 / 3.0)) < 1e-10);
    }

    #[test]
    fn sharp_total_composes() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let u = vertical_crack(1.0);
        // Matching datum (the trace of u itself on the boundary).
        let datum: BoundaryTraceFn = Arc::new(|p: Point2| {
            if p.x > 0.5 {
                Vec2::new(1.0, 0.0)
            } else {
                Vec2::ZERO
            }
        });
        let t = sharp_total(&u, Some(&datum), &a, &law, &PotentialSpec::zero()).unwrap();
        assert!(num::abs(t.boundary_r) < 1e-12);
        assert!(num::abs(t.total - (2.0 + 2.0 / 3.0)) < 1e-10);
        let t2 = sharp_total(&u, None, &a, &law, &PotentialSpec::zero()).unwrap();
        assert!(num::abs(t.total - t2.total) < 1e-14);
    }
}
