//! Low-order potentials `F(x, M, v)` with linear growth in the strain, their
//! recession functions, and admissibility validation.
//!
//! Five concrete families ship: fluid-pressure (fracking) potentials with an
//! affine-in-v or strain-dependent pressure, the stratified two-rock variant,
//! plastic slip `p(x,v) g(|M|)`, the Tresca eigenvalue-gap potential, and the
//! non-interpenetration penalty `(1-v)² p(x) tr(M)⁻`.
//!
//! Each constructor registers a closed-form recession function; the numeric
//! difference-quotient limit [`recession_numeric`] serves as an independent
//! oracle against it, never as the production path.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{DomainRect, Point2, Polyline};
use crate::material::{sigma_max, DamageLaw, ElasticTensor};
use crate::num;
use crate::rng::SampleRng;
use crate::tensor::SymMat2;

pub type ScalarField = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type PressureXV = Arc<dyn Fn(Point2, f64) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(SymMat2) -> f64 + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(Point2, SymMat2, f64) -> f64 + Send + Sync>;
pub type RecessionFn = Arc<dyn Fn(Point2, SymMat2) -> f64 + Send + Sync>;

/// A scalar coefficient field with declared sup-norm and Lipschitz constant.
#[derive(Clone)]
pub struct SpatialField {
    pub f: ScalarField,
    pub sup: f64,
    pub lipschitz: f64,
}

impl SpatialField {
    pub fn new(f: ScalarField, sup: f64, lipschitz: f64) -> Self {
        SpatialField { f, sup, lipschitz }
    }

    pub fn constant(c: f64) -> Self {
        SpatialField { f: Arc::new(move |_| c), sup: num::abs(c), lipschitz: 0.0 }
    }

    pub fn eval(&self, x: Point2) -> f64 {
        (self.f)(x)
    }
}

/// Pressure laws feeding the fracking potential `F = -p(x, M, v) tr(M)`.
#[derive(Clone)]
pub enum PressureLaw {
    /// `p(x, M, v) = (m v + q) ρ(x)`.
    AffineInV { m: f64, q: f64, rho: SpatialField },
    /// `p(x, M, v) = ρ(x, v) g(M)` with `g` concave and bounded; `g_limit`
    /// is `γ(M) = lim_{t→∞} g(tM)`.
    StrainDependent {
        rho: PressureXV,
        rho_sup: f64,
        g: MatrixFn,
        g_sup: f64,
        g_limit: MatrixFn,
        spatial_lipschitz: f64,
    },
    /// Two permeable rocks separated by a polyline interface; the pressure
    /// blends linearly from 0 on the interface to `ρ(v) p_i(M)` at distance
    /// `delta` into rock `i`.
    TwoRocks {
        p1: MatrixFn,
        p1_limit: MatrixFn,
        p2: MatrixFn,
        p2_limit: MatrixFn,
        p_sup: f64,
        rho_v: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        rho_sup: f64,
        interface: Polyline,
        delta: f64,
    },
}

impl PressureLaw {
    /// Evaluate `p(x, M, v)`.
    pub fn eval(&self, x: Point2, m: SymMat2, v: f64) -> f64 {
        match self {
            PressureLaw::AffineInV { m: mm, q, rho } => (mm * v + q) * rho.eval(x),
            PressureLaw::StrainDependent { rho, g, .. } => rho(x, v) * g(m),
            PressureLaw::TwoRocks { p1, p2, rho_v, interface, delta, .. } => {
                let blend = num::min(interface.distance(x) / delta, 1.0);
                let p = if interface.side(x) >= 0.0 { p1(m) } else { p2(m) };
                blend * rho_v(v) * p
            }
        }
    }

    /// Validate the declared structure on seeded samples.
    pub fn validate(&self, domain: &DomainRect, seed: u64) -> Result<()> {
        let mut rng = SampleRng::new(seed);
        match self {
            PressureLaw::AffineInV { rho, .. } => {
                // Declared Lipschitz constant must hold on sampled pairs.
                for _ in 0..2000 {
                    let a = rng.point_in(domain);
                    let b = rng.point_in(domain);
                    let d = a.sub(b).norm();
                    if d > 1e-12
                        && num::abs(rho.eval(a) - rho.eval(b)) > rho.lipschitz * d + 1e-9
                    {
                        return Err(Error::InvalidInput(String::from(
                            "rho violates its declared Lipschitz constant",
                        )));
                    }
                    if num::abs(rho.eval(a)) > rho.sup + 1e-9 {
                        return Err(Error::InvalidInput(String::from(
                            "rho exceeds its declared sup norm",
                        )));
                    }
                }
            }
            PressureLaw::StrainDependent { g, g_sup, .. } => {
                for _ in 0..2000 {
                    let m = rng.sym_mat_log_scaled(-1.0, 2.0);
                    let n = rng.sym_mat_log_scaled(-1.0, 2.0);
                    if num::abs(g(m)) > *g_sup + 1e-9 {
                        return Err(Error::InvalidInput(String::from(
                            "g exceeds its registered bound",
                        )));
                    }
                    // Midpoint concavity.
                    let mid = m.add(&n).scale(0.5);
                    if g(mid) + 1e-9 * (1.0 + num::abs(g(m)) + num::abs(g(n)))
                        < 0.5 * (g(m) + g(n))
                    {
                        return Err(Error::InvalidInput(String::from(
                            "g fails the midpoint concavity test",
                        )));
                    }
                }
            }
            PressureLaw::TwoRocks { p1, p2, p_sup, delta, interface, .. } => {
                if *delta <= 0.0 {
                    return Err(Error::InvalidInput(String::from("delta must be positive")));
                }
                for p in [p1, p2] {
                    for _ in 0..1000 {
                        let m = rng.sym_mat_log_scaled(-1.0, 2.0);
                        let n = rng.sym_mat_log_scaled(-1.0, 2.0);
                        if num::abs(p(m)) > *p_sup + 1e-9 {
                            return Err(Error::InvalidInput(String::from(
                                "rock pressure exceeds its registered bound",
                            )));
                        }
                        let mid = m.add(&n).scale(0.5);
                        if p(mid) + 1e-9 * (1.0 + num::abs(p(m)) + num::abs(p(n)))
                            < 0.5 * (p(m) + p(n))
                        {
                            return Err(Error::InvalidInput(String::from(
                                "rock pressure fails the midpoint concavity test",
                            )));
                        }
                    }
                }
                // Continuity across the δ-layer: the blend vanishes on S and
                // is capped linearly in the distance to it.
                let (rho_v, rho_sup) = match self {
                    PressureLaw::TwoRocks { rho_v, rho_sup, .. } => (rho_v, *rho_sup),
                    _ => unreachable!(),
                };
                for _ in 0..1000 {
                    let x = rng.point_in(domain);
                    let d = interface.distance(x);
                    if d < *delta {
                        let m = rng.sym_mat();
                        let v = rng.unit();
                        let got = self.eval(x, m, v);
                        let cap = d / delta * rho_sup * p_sup;
                        if num::abs(got) > cap + 1e-9 {
                            return Err(Error::InvalidInput(String::from(
                                "two-rock blend is not linear in distance to the interface",
                            )));
                        }
                        let _ = rho_v;
                    }
                }
            }
        }
        Ok(())
    }
}

/// How `F` depends on the damage variable; a hint the solver uses to pick the
/// closed-form pointwise minimizer where one exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VDependence {
    /// F does not depend on v.
    Independent,
    /// F is affine in v.
    Affine,
    /// F carries a `(1-v)²` factor.
    OneMinusVSquared,
    /// Anything else: the solver falls back to a 1D scan.
    General,
}

/// A validated low-order potential with registered growth bounds.
#[derive(Clone)]
pub struct PotentialSpec {
    pub name: &'static str,
    pub value: ValueFn,
    pub recession_closed_form: Option<RecessionFn>,
    /// Lower linear bound: `F ≥ -sigma |M|`.
    pub sigma: f64,
    /// Upper linear bound: `F ≤ ell |M|`.
    pub ell: f64,
    /// Declared spatial Lipschitz constant of `F/|M|`.
    pub spatial_lipschitz: f64,
    pub v_dependence: VDependence,
}

impl PotentialSpec {
    /// The identically-zero potential.
    pub fn zero() -> Self {
        PotentialSpec {
            name: "none",
            value: Arc::new(|_, _, _| 0.0),
            recession_closed_form: Some(Arc::new(|_, _| 0.0)),
            sigma: 0.0,
            ell: 0.0,
            spatial_lipschitz: 0.0,
            v_dependence: VDependence::Independent,
        }
    }

    pub fn eval(&self, x: Point2, m: SymMat2, v: f64) -> f64 {
        (self.value)(x, m, v)
    }

    /// Closed-form recession; all shipped potentials carry one.
    pub fn recession(&self, x: Point2, m: SymMat2) -> Option<f64> {
        self.recession_closed_form.as_ref().map(|f| f(x, m))
    }
}

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Fracking potential `F(x, M, v) = -p(x, M, v) tr(M)`.
///
/// The recession for the affine pressure is `F_∞(x, M) = -q ρ(x) tr(M)`; the
/// sign is dictated both by the one-homogeneity of `F(x, ·, 0)` itself and by
/// the jump term `-q ∫ ρ [u]·ν` of the limit functional, and is cross-checked
/// against [`recession_numeric`] in the test suite.
pub fn make_fracking(p: PressureLaw) -> PotentialSpec {
    match p {
        PressureLaw::AffineInV { m, q, rho } => {
            let p_sup = num::max(num::abs(q), num::abs(m + q)) * rho.sup;
            let rho_rec = rho.clone();
            let value_rho = rho.clone();
            PotentialSpec {
                name: "fracking_affine",
                value: Arc::new(move |x, mat, v| {
                    -(m * v + q) * value_rho.eval(x) * mat.trace()
                }),
                recession_closed_form: Some(Arc::new(move |x, mat| {
                    -q * rho_rec.eval(x) * mat.trace()
                })),
                sigma: SQRT2 * p_sup,
                ell: SQRT2 * p_sup,
                spatial_lipschitz: SQRT2 * num::max(num::abs(q), num::abs(m + q)) * rho.lipschitz,
                v_dependence: if m == 0.0 { VDependence::Independent } else { VDependence::Affine },
            }
        }
        PressureLaw::StrainDependent { rho, rho_sup, g, g_sup, g_limit, spatial_lipschitz } => {
            let rho_rec = rho.clone();
            let rho_val = rho.clone();
            let g_val = g.clone();
            PotentialSpec {
                name: "fracking_strain",
                value: Arc::new(move |x, mat, v| -rho_val(x, v) * g_val(mat) * mat.trace()),
                recession_closed_form: Some(Arc::new(move |x, mat| {
                    -rho_rec(x, 0.0) * g_limit(mat) * mat.trace()
                })),
                sigma: SQRT2 * rho_sup * g_sup,
                ell: SQRT2 * rho_sup * g_sup,
                spatial_lipschitz,
                v_dependence: VDependence::General,
            }
        }
        PressureLaw::TwoRocks {
            p1,
            p1_limit,
            p2,
            p2_limit,
            p_sup,
            rho_v,
            rho_sup,
            interface,
            delta,
        } => {
            let iface_val = interface.clone();
            let iface_rec = interface.clone();
            let rho_val = rho_v.clone();
            let rho0 = rho_v(0.0);
            PotentialSpec {
                name: "two_rocks",
                value: Arc::new(move |x, mat, v| {
                    let blend = num::min(iface_val.distance(x) / delta, 1.0);
                    let p = if iface_val.side(x) >= 0.0 { p1(mat) } else { p2(mat) };
                    -blend * rho_val(v) * p * mat.trace()
                }),
                recession_closed_form: Some(Arc::new(move |x, mat| {
                    let blend = num::min(iface_rec.distance(x) / delta, 1.0);
                    let pinf =
                        if iface_rec.side(x) >= 0.0 { p1_limit(mat) } else { p2_limit(mat) };
                    -blend * rho0 * pinf * mat.trace()
                })),
                sigma: SQRT2 * rho_sup * p_sup,
                ell: SQRT2 * rho_sup * p_sup,
                spatial_lipschitz: SQRT2 * rho_sup * p_sup / delta,
                v_dependence: VDependence::General,
            }
        }
    }
}

fn check_sublinear(g: &dyn Fn(f64) -> f64) -> Result<()> {
    if num::abs(g(0.0)) > 1e-12 {
        return Err(Error::InvalidInput(String::from("g(0) must be 0")));
    }
    for t in [1e2, 1e4, 1e6] {
        if g(2.0 * t) > 2.0 * g(t) * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::InvalidInput(String::from(
                "g is superlinear on samples; sublinear growth required",
            )));
        }
    }
    Ok(())
}

fn check_nonnegative_pressure(
    p: &PressureXV,
    domain: &DomainRect,
    seed: u64,
) -> Result<()> {
    let mut rng = SampleRng::new(seed);
    for _ in 0..2000 {
        let x = rng.point_in(domain);
        let v = rng.unit();
        if p(x, v) < 0.0 {
            return Err(Error::InvalidInput(String::from("pressure must be non-negative")));
        }
    }
    Ok(())
}

/// Plastic-slip potential `F(x, M, v) = p(x, v) g(|M|)` with `g` convex,
/// sublinear of slope `g_inf` at infinity.
pub fn make_plastic_slip(
    p: PressureXV,
    p_sup: f64,
    spatial_lipschitz: f64,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    g_inf: f64,
    domain: &DomainRect,
) -> Result<PotentialSpec> {
    check_sublinear(g.as_ref())?;
    check_nonnegative_pressure(&p, domain, 0x9a57)?;
    let p_rec = p.clone();
    let g_val = g.clone();
    Ok(PotentialSpec {
        name: "plastic_slip",
        value: Arc::new(move |x, mat, v| p(x, v) * g_val(mat.norm())),
        recession_closed_form: Some(Arc::new(move |x, mat| {
            g_inf * p_rec(x, 0.0) * mat.norm()
        })),
        sigma: 0.0,
        ell: p_sup * g_inf,
        spatial_lipschitz,
        v_dependence: VDependence::General,
    })
}

/// Tresca potential `F(x, M, v) = p(x, v) g(λ_max(𝔸M) - λ_min(𝔸M))`.
pub fn make_tresca(
    p: PressureXV,
    p_sup: f64,
    spatial_lipschitz: f64,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    g_inf: f64,
    a: ElasticTensor,
    domain: &DomainRect,
) -> Result<PotentialSpec> {
    check_sublinear(g.as_ref())?;
    check_nonnegative_pressure(&p, domain, 0x7e5c)?;
    let p_rec = p.clone();
    let g_val = g.clone();
    let a_rec = a;
    Ok(PotentialSpec {
        name: "tresca",
        value: Arc::new(move |x, mat, v| p(x, v) * g_val(a.apply(&mat).eigen_gap())),
        // λ_max(t𝔸M) = t λ_max(𝔸M) for t > 0, so the gap is 1-homogeneous
        // and the recession closes in the same form as g's slope at infinity.
        recession_closed_form: Some(Arc::new(move |x, mat| {
            g_inf * p_rec(x, 0.0) * a_rec.apply(&mat).eigen_gap()
        })),
        sigma: 0.0,
        ell: p_sup * g_inf * SQRT2 * a.kappa(),
        spatial_lipschitz,
        v_dependence: VDependence::General,
    })
}

/// Non-interpenetration penalty `F(x, M, v) = (1-v)² p(x) tr(M)⁻`.
pub fn make_non_interpenetration(
    p_field: SpatialField,
    domain: &DomainRect,
    seed: u64,
) -> Result<PotentialSpec> {
    let mut rng = SampleRng::new(seed);
    for _ in 0..2000 {
        if p_field.eval(rng.point_in(domain)) < 0.0 {
            return Err(Error::InvalidInput(String::from(
                "non-interpenetration coefficient must be non-negative",
            )));
        }
    }
    let p_rec = p_field.clone();
    let p_sup = p_field.sup;
    let lip = p_field.lipschitz;
    Ok(PotentialSpec {
        name: "non_interpenetration",
        value: Arc::new(move |x, mat, v| {
            (1.0 - v) * (1.0 - v) * p_field.eval(x) * num::neg_part(mat.trace())
        }),
        recession_closed_form: Some(Arc::new(move |x, mat| {
            p_rec.eval(x) * num::neg_part(mat.trace())
        })),
        sigma: 0.0,
        ell: SQRT2 * p_sup,
        spatial_lipschitz: SQRT2 * lip,
        v_dependence: VDependence::OneMinusVSquared,
    })
}

/// Difference-quotient ladder used by the numeric recession oracle:
/// `t = 2⁶, 2⁸, …, 2²⁰`.
pub const RECESSION_T_LADDER: [f64; 8] =
    [64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0, 262144.0, 1048576.0];

/// Numeric recession `lim_{t→∞} (F(x, L + tM, 0) - F(x, L, 0)) / t`.
///
/// Convexity of `F(x, ·, 0)` makes the quotient non-decreasing in `t`; the
/// returned value is Richardson-stabilized from the two largest `t`. The
/// spread of the last three raw quotients must settle below
/// `1e-5 · (1 + |value|)` or the sequence is reported as non-convergent.
pub fn recession_numeric(
    f: &PotentialSpec,
    x: Point2,
    m: SymMat2,
    l: SymMat2,
) -> Result<f64> {
    let base = f.eval(x, l, 0.0);
    let mut samples = Vec::with_capacity(RECESSION_T_LADDER.len());
    for &t in RECESSION_T_LADDER.iter() {
        let q = (f.eval(x, l.add(&m.scale(t)), 0.0) - base) / t;
        samples.push((t, q));
    }
    let value = num::richardson_tail(&samples);
    let n = samples.len();
    let tail = &samples[n - 3..];
    let spread = tail.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, num::max)
        - tail.iter().map(|&(_, q)| q).fold(f64::INFINITY, num::min);
    if !(spread <= 1e-5 * (1.0 + num::abs(value))) {
        return Err(Error::RecessionNotConverged { spread, value });
    }
    Ok(value)
}

/// Sampled continuity moduli of the v-dependence near an endpoint.
fn omega_f(f: &PotentialSpec, domain: &DomainRect, s: f64, endpoint: f64, rng: &mut SampleRng) -> f64 {
    let mut sup: f64 = 0.0;
    for _ in 0..16 {
        let x = rng.point_in(domain);
        for k in 0..256 {
            let angle_seed = k as f64 / 256.0;
            // Deterministic direction sweep on the unit sphere of SymMat2.
            let phi = core::f64::consts::PI * (2.0 * angle_seed - 1.0);
            let z = 2.0 * ((k as f64 + 0.5) / 256.0) - 1.0;
            let r = num::sqrt(num::max(0.0, 1.0 - z * z));
            let m = SymMat2::new(r * cos_approx(phi), r * sin_approx(phi), z / SQRT2);
            let m = m.scale(1.0 / m.norm());
            let d = num::abs(f.eval(x, m, s) - f.eval(x, m, endpoint));
            sup = num::max(sup, d);
        }
    }
    sup
}

#[cfg(feature = "std")]
fn cos_approx(x: f64) -> f64 {
    x.cos()
}
#[cfg(not(feature = "std"))]
fn cos_approx(x: f64) -> f64 {
    libm::cos(x)
}
#[cfg(feature = "std")]
fn sin_approx(x: f64) -> f64 {
    x.sin()
}
#[cfg(not(feature = "std"))]
fn sin_approx(x: f64) -> f64 {
    libm::sin(x)
}

/// Outcome of [`validate_bounds`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Sampled estimate of the lower linear bound coefficient.
    pub sigma_hat: f64,
    /// Sampled estimate of the upper linear bound coefficient.
    pub ell_hat: f64,
    /// Admissibility threshold from the damage law / elastic tensor.
    pub sigma_threshold: f64,
    pub sigma_ok: bool,
    pub zero_at_zero_ok: bool,
    pub convex_v0_ok: bool,
    pub convex_v1_ok: bool,
    /// ω_F(s; 1) at s ∈ {0.9, 0.99, 0.999}.
    pub moduli_to_one: [f64; 3],
    /// ω_F(s; 0) at s ∈ {0.1, 0.01, 0.001}.
    pub moduli_to_zero: [f64; 3],
    pub moduli_ok: bool,
    pub pass: bool,
}

/// Statistical check of the growth bounds, endpoint convexity and continuity
/// moduli of a potential against a material.
///
/// `σ̂` under-estimates the true sup by sampling; it must stay strictly below
/// the admissible threshold for the report to pass. The moduli pass when the
/// sampled sequence decays toward the endpoint (final value at most a quarter
/// of the first, or negligibly small outright).
pub fn validate_bounds(
    f: &PotentialSpec,
    law: &DamageLaw,
    a: &ElasticTensor,
    domain: &DomainRect,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    assert!(samples >= 10_000, "validate_bounds needs at least 1e4 samples");
    let mut rng = SampleRng::new(seed);
    let mut sigma_hat: f64 = 0.0;
    let mut ell_hat: f64 = 0.0;
    let mut zero_ok = true;
    for _ in 0..samples {
        let x = rng.point_in(domain);
        let m = rng.sym_mat_log_scaled(-2.0, 2.0);
        let v = rng.unit();
        let val = f.eval(x, m, v);
        let n = m.norm();
        sigma_hat = num::max(sigma_hat, num::max(-val, 0.0) / n);
        ell_hat = num::max(ell_hat, val / n);
        if num::abs(f.eval(x, SymMat2::ZERO, v)) > 1e-12 {
            zero_ok = false;
        }
    }

    let mut convex = [true, true];
    for (idx, v) in [0.0, 1.0].into_iter().enumerate() {
        for _ in 0..samples / 10 {
            let x = rng.point_in(domain);
            let m = rng.sym_mat_log_scaled(-1.0, 1.5);
            let n = rng.sym_mat_log_scaled(-1.0, 1.5);
            let mid = m.add(&n).scale(0.5);
            let lhs = f.eval(x, mid, v);
            let rhs = 0.5 * (f.eval(x, m, v) + f.eval(x, n, v));
            if lhs > rhs + 1e-9 * (1.0 + num::abs(rhs)) {
                convex[idx] = false;
            }
        }
    }

    let s_one = [0.9, 0.99, 0.999];
    let s_zero = [0.1, 0.01, 0.001];
    let mut moduli_to_one = [0.0; 3];
    let mut moduli_to_zero = [0.0; 3];
    for i in 0..3 {
        moduli_to_one[i] = omega_f(f, domain, s_one[i], 1.0, &mut rng);
        moduli_to_zero[i] = omega_f(f, domain, s_zero[i], 0.0, &mut rng);
    }
    let decays = |m: &[f64; 3]| -> bool {
        let tiny = 1e-12 * (1.0 + ell_hat);
        (m[1] <= m[0] + tiny && m[2] <= m[1] + tiny && m[2] <= 0.25 * m[0] + tiny)
            || m.iter().all(|&x| x <= tiny)
    };
    let moduli_ok = decays(&moduli_to_one) && decays(&moduli_to_zero);

    let sigma_threshold = sigma_max(law, a, domain.area());
    let sigma_ok = sigma_hat < sigma_threshold;
    let pass = sigma_ok && zero_ok && convex[0] && convex[1] && moduli_ok;
    ValidationReport {
        sigma_hat,
        ell_hat,
        sigma_threshold,
        sigma_ok,
        zero_at_zero_ok: zero_ok,
        convex_v0_ok: convex[0],
        convex_v1_ok: convex[1],
        moduli_to_one,
        moduli_to_zero,
        moduli_ok,
        pass,
    }
}
