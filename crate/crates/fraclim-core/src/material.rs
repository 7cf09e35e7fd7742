//! Elastic tensor, damage law, and the closed-form constants derived from
//! them: the surface coefficients `a = 2√(αψ(0))`, `b = 2∫₀¹ψ`, the
//! admissible-σ threshold and the energy bound constant.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num;
use crate::rng::SampleRng;
use crate::tensor::SymMat2;

/// The fourth-order tensor 𝔸 acting on symmetric 2x2 matrices.
///
/// `Isotropic { mu, lam }` realizes `𝔸M = mu·M + (lam/2)·tr(M)·Id` (the
/// one-half convention for the isotropic tensor); `ScaledIdentity { c }` is
/// `𝔸M = c·M`. The ellipticity constant κ with
/// `κ⁻¹|M|² ≤ 𝔸M·M ≤ κ|M|²` is computed from the eigenvalues of the
/// quadratic form, never user-supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElasticKind {
    Isotropic { mu: f64, lam: f64 },
    ScaledIdentity { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticTensor {
    kind: ElasticKind,
    kappa: f64,
}

impl ElasticTensor {
    pub fn isotropic(mu: f64, lam: f64) -> Result<Self> {
        if mu <= 0.0 || !mu.is_finite() {
            return Err(Error::InvalidInput(String::from("mu must be positive")));
        }
        if lam < 0.0 || !lam.is_finite() {
            return Err(Error::InvalidInput(String::from("lam must be non-negative")));
        }
        // Eigenvalues of the Voigt form are {mu + lam, mu, mu}.
        let hi = mu + lam;
        let kappa = num::max(hi, 1.0 / mu);
        Ok(ElasticTensor { kind: ElasticKind::Isotropic { mu, lam }, kappa })
    }

    pub fn scaled_identity(c: f64) -> Result<Self> {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::InvalidInput(String::from("c must be positive")));
        }
        let kappa = num::max(c, 1.0 / c);
        Ok(ElasticTensor { kind: ElasticKind::ScaledIdentity { c }, kappa })
    }

    pub fn kind(&self) -> ElasticKind {
        self.kind
    }

    /// Computed ellipticity constant.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Accept a caller-proposed κ only if it dominates the computed one and
    /// survives an ellipticity check on random samples.
    pub fn with_kappa(mut self, kappa: f64, seed: u64) -> Result<Self> {
        if kappa < self.kappa {
            return Err(Error::InvalidInput(String::from(
                "user-supplied kappa violates ellipticity on samples",
            )));
        }
        let mut rng = SampleRng::new(seed);
        for _ in 0..1000 {
            let m = rng.sym_mat();
            let q = self.density(&m);
            let n2 = m.dot(&m);
            if q < n2 / kappa - 1e-12 || q > kappa * n2 + 1e-12 {
                return Err(Error::InvalidInput(String::from(
                    "user-supplied kappa violates ellipticity on samples",
                )));
            }
        }
        self.kappa = kappa;
        Ok(self)
    }

    /// `𝔸M`.
    pub fn apply(&self, m: &SymMat2) -> SymMat2 {
        match self.kind {
            ElasticKind::Isotropic { mu, lam } => {
                let tr = m.trace();
                SymMat2::new(
                    mu * m.xx + 0.5 * lam * tr,
                    mu * m.yy + 0.5 * lam * tr,
                    mu * m.xy,
                )
            }
            ElasticKind::ScaledIdentity { c } => m.scale(c),
        }
    }

    /// Elastic density `𝔸M·M ≥ 0`.
    pub fn density(&self, m: &SymMat2) -> f64 {
        self.apply(m).dot(m)
    }
}

/// Choice of damage potential ψ on `[0, 1]`.
///
/// ψ must be non-increasing and convex with ψ(1) = 0. The quadratic
/// `(1 - v)²` ships as the default; arbitrary laws are accepted as tabulated
/// monotone convex data with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiKind {
    Quadratic,
    /// Knots `(v, ψ(v))`, sorted by `v`, covering `[0, 1]`.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DamageLaw {
    psi: PsiKind,
    alpha: f64,
    psi0: f64,
    int_psi: f64,
}

impl DamageLaw {
    /// ψ(v) = (1-v)².
    pub fn quadratic(alpha: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidInput(String::from("alpha must be positive")));
        }
        Ok(DamageLaw { psi: PsiKind::Quadratic, alpha, psi0: 1.0, int_psi: 1.0 / 3.0 })
    }

    /// Tabulated ψ with linear interpolation between knots.
    pub fn tabulated(alpha: f64, knots: Vec<(f64, f64)>) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidInput(String::from("alpha must be positive")));
        }
        if knots.len() < 2 {
            return Err(Error::InvalidInput(String::from("psi table needs at least 2 knots")));
        }
        if num::abs(knots[0].0) > 1e-14 || num::abs(knots[knots.len() - 1].0 - 1.0) > 1e-14 {
            return Err(Error::InvalidInput(String::from("psi table must cover [0, 1]")));
        }
        if knots[knots.len() - 1].1 != 0.0 {
            return Err(Error::InvalidInput(String::from("psi(1) must equal 0 exactly")));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(String::from("psi knots must be increasing in v")));
            }
        }
        let law = DamageLaw {
            psi0: knots[0].1,
            int_psi: 0.0,
            psi: PsiKind::Tabulated(knots),
            alpha,
        };
        law.check_shape()?;
        // Piecewise-linear data integrates exactly by trapezoids; the generic
        // quadrature path below is used when a direct formula is unavailable.
        let int_psi = match &law.psi {
            PsiKind::Tabulated(k) => k
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum(),
            PsiKind::Quadratic => unreachable!(),
        };
        Ok(DamageLaw { int_psi, ..law })
    }

    /// Monotonicity and convexity on a 1000-point grid.
    fn check_shape(&self) -> Result<()> {
        let n = 1000;
        let mut prev = self.psi(0.0);
        let mut prev_slope = f64::NEG_INFINITY;
        for i in 1..=n {
            let v = i as f64 / n as f64;
            let cur = self.psi(v);
            if cur > prev + 1e-12 {
                return Err(Error::InvalidInput(String::from("psi must be non-increasing")));
            }
            let slope = (cur - prev) * n as f64;
            if slope + 1e-9 < prev_slope {
                return Err(Error::InvalidInput(String::from("psi must be convex")));
            }
            prev_slope = slope;
            prev = cur;
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn int_psi(&self) -> f64 {
        self.int_psi
    }

    pub fn kind(&self) -> &PsiKind {
        &self.psi
    }

    /// True when ψ vanishes identically (a degenerate law kept representable
    /// so the σ-threshold path can report it).
    pub fn is_degenerate(&self) -> bool {
        self.psi0 == 0.0 && self.int_psi == 0.0
    }

    pub fn psi(&self, v: f64) -> f64 {
        let v = num::clamp(v, 0.0, 1.0);
        match &self.psi {
            PsiKind::Quadratic => (1.0 - v) * (1.0 - v),
            PsiKind::Tabulated(knots) => {
                let mut lo = 0usize;
                let mut hi = knots.len() - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if knots[mid].0 <= v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (v0, p0) = knots[lo];
                let (v1, p1) = knots[hi];
                p0 + (p1 - p0) * (v - v0) / (v1 - v0)
            }
        }
    }

    /// Primitive `h(t) = ∫₀ᵗ ψ(τ) dτ` (non-decreasing, `h(1) = ∫₀¹ψ`).
    pub fn h(&self, t: f64) -> f64 {
        let t = num::clamp(t, 0.0, 1.0);
        match &self.psi {
            PsiKind::Quadratic => (1.0 - (1.0 - t) * (1.0 - t) * (1.0 - t)) / 3.0,
            PsiKind::Tabulated(knots) => {
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let (v0, p0) = w[0];
                    let (v1, p1) = w[1];
                    if t <= v0 {
                        break;
                    }
                    let upper = num::min(t, v1);
                    let pu = p0 + (p1 - p0) * (upper - v0) / (v1 - v0);
                    acc += 0.5 * (p0 + pu) * (upper - v0);
                }
                acc
            }
        }
    }

    /// Numeric `∫₀¹ψ` by adaptive quadrature; the constructor-registered value
    /// is the production path, this is the generic fallback/cross-check.
    pub fn int_psi_quadrature(&self) -> f64 {
        num::adaptive_simpson(&|v| self.psi(v), 0.0, 1.0, 1e-10)
    }
}

/// Surface coefficients `(a, b) = (2√(α ψ(0)), 2 ∫₀¹ ψ)`.
pub fn coefficients(law: &DamageLaw) -> (f64, f64) {
    (2.0 * num::sqrt(law.alpha() * law.psi0()), 2.0 * law.int_psi())
}

const LAMBDA_SCAN_START: f64 = 1e-6;
const LAMBDA_SCAN_POINTS: usize = 1024;

fn sigma_integrand(law: &DamageLaw, kappa: f64, domain_area: f64, lambda: f64) -> f64 {
    let psi = law.psi(lambda);
    if psi <= 0.0 {
        return 0.0;
    }
    let alpha = law.alpha();
    2.0 * num::sqrt(alpha * psi)
        / (num::sqrt(kappa) * (1.0 + 2.0 * num::sqrt(alpha * domain_area * psi / lambda)))
}

/// Admissible-σ threshold: the maximum over `λ ∈ (0,1)` of
/// `2√(αψ(λ)) / (√κ (1 + 2√(α|Ω|ψ(λ)/λ)))`, strictly below the envelope
/// `2√(αψ(0)/κ)`.
///
/// The integrand is singular as `λ → 0`, so the 1024-point bracketing scan
/// starts at `λ = 1e-6` before golden-section refinement to `|Δλ| ≤ 1e-8`.
/// A degenerate (all-zero) ψ yields 0; admissible potentials must then be
/// free of any negative part.
pub fn sigma_max(law: &DamageLaw, a: &ElasticTensor, domain_area: f64) -> f64 {
    assert!(domain_area > 0.0, "domain_area must be positive");
    if law.is_degenerate() {
        return 0.0;
    }
    let kappa = a.kappa();
    let (_, v) = num::scan_maximize(
        |l| sigma_integrand(law, kappa, domain_area, l),
        LAMBDA_SCAN_START,
        1.0 - LAMBDA_SCAN_START,
        LAMBDA_SCAN_POINTS,
        1e-8,
    );
    v
}

/// The constant `C` with `W_eps(u, v) ≤ C (F_eps(u, v) + 1)` for every
/// feasible pair, given a potential with lower bound coefficient σ.
///
/// `C = 1/(1 - σ·m)` where `m = min_λ` of the reciprocal of the σ-threshold
/// integrand, i.e. `m = 1/sigma_max`; it blows up as σ approaches the
/// threshold and tends to 1 as σ → 0.
pub fn energy_bound_constant(
    sigma: f64,
    law: &DamageLaw,
    a: &ElasticTensor,
    domain_area: f64,
) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Parameter(String::from("sigma must be non-negative")));
    }
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let smax = sigma_max(law, a, domain_area);
    if sigma >= smax {
        return Err(Error::InfeasibleSigma { sigma, sigma_max: smax });
    }
    Ok(1.0 / (1.0 - sigma / smax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn apply_matches_hand_values() {
        // Identity case.
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        assert_eq!(a.apply(&SymMat2::identity()), SymMat2::identity());
        // lam = 0 reduces to mu·M.
        let a = ElasticTensor::isotropic(1.0, 0.0).unwrap();
        let m = SymMat2::new(1.0, 0.0, 0.0);
        assert_eq!(a.apply(&m), m);
        // mu·M + (lam/2)·tr(M)·Id on the identity: 1·Id + 1·2·Id/... = 3·Id.
        let a = ElasticTensor::isotropic(1.0, 2.0).unwrap();
        assert_eq!(a.apply(&SymMat2::identity()), SymMat2::diag(3.0, 3.0));
    }

    #[test]
    fn density_matches_hand_values() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        assert_eq!(a.density(&SymMat2::ZERO), 0.0);
        // |M|² for M = 2·e1⊗e1.
        assert_eq!(a.density(&SymMat2::new(2.0, 0.0, 0.0)), 4.0);
        let a = ElasticTensor::isotropic(1.0, 2.0).unwrap();
        // 𝔸Id·Id = 3Id·Id = 6.
        assert_eq!(a.density(&SymMat2::identity()), 6.0);
    }

    #[test]
    fn ellipticity_on_samples() {
        let cases = [
            ElasticTensor::isotropic(1.0, 2.0).unwrap(),
            ElasticTensor::isotropic(0.3, 0.0).unwrap(),
            ElasticTensor::scaled_identity(4.0).unwrap(),
        ];
        let mut rng = SampleRng::new(7);
        for a in cases {
            let k = a.kappa();
            for _ in 0..10_000 {
                let m = rng.sym_mat();
                let q = a.density(&m);
                let n2 = m.dot(&m);
                assert!(q >= n2 / k - 1e-12 && q <= k * n2 + 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_form_is_symmetric() {
        let a = ElasticTensor::isotropic(1.3, 0.7).unwrap();
        let mut rng = SampleRng::new(3);
        for _ in 0..100 {
            let m = rng.sym_mat();
            let l = rng.sym_mat();
            let lhs = a.apply(&m).dot(&l);
            let rhs = a.apply(&l).dot(&m);
            assert!(num::abs(lhs - rhs) < 1e-13);
        }
    }

    #[test]
    fn coefficients_quadratic() {
        let law = DamageLaw::quadratic(1.0).unwrap();
        let (a, b) = coefficients(&law);
        assert!(num::abs(a - 2.0) < 1e-15);
        assert!(num::abs(b - 2.0 / 3.0) < 1e-15);
        // a scales with √α.
        let law = DamageLaw::quadratic(4.0).unwrap();
        assert!(num::abs(coefficients(&law).0 - 4.0) < 1e-15);
    }

    #[test]
    fn quadrature_consistency_for_quadratic_psi() {
        let law = DamageLaw::quadratic(1.0).unwrap();
        assert!(num::abs(law.int_psi_quadrature() - law.int_psi()) < 1e-10);
    }

    #[test]
    fn tabulated_law_matches_quadratic_closely() {
        let knots: Vec<(f64, f64)> = (0..=64)
            .map(|i| {
                let v = i as f64 / 64.0;
                (v, (1.0 - v) * (1.0 - v))
            })
            .collect();
        let law = DamageLaw::tabulated(1.0, knots).unwrap();
        assert_eq!(law.psi(1.0), 0.0);
        assert!(num::abs(law.psi(0.5) - 0.25) < 1e-4);
        assert!(num::abs(law.h(1.0) - law.int_psi()) < 1e-15);
        assert!(num::abs(law.int_psi() - 1.0 / 3.0) < 1e-4);
    }

    #[test]
    fn tabulated_rejects_bad_shapes() {
        // Increasing somewhere.
        assert!(DamageLaw::tabulated(1.0, vec![(0.0, 0.5), (0.5, 0.8), (1.0, 0.0)]).is_err());
        // psi(1) != 0.
        assert!(DamageLaw::tabulated(1.0, vec![(0.0, 1.0), (1.0, 0.1)]).is_err());
        // Non-convex kink.
        assert!(DamageLaw::tabulated(
            1.0,
            vec![(0.0, 1.0), (0.5, 0.9), (0.75, 0.2), (1.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn h_is_nondecreasing() {
        let law = DamageLaw::quadratic(2.0).unwrap();
        let mut prev = 0.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let h = law.h(t);
            assert!(h >= prev);
            prev = h;
        }
        assert!(num::abs(law.h(1.0) - law.int_psi()) < 1e-15);
    }

    #[test]
    fn sigma_max_below_envelope() {
        let mut rng = SampleRng::new(11);
        for _ in 0..20 {
            let alpha = rng.range(0.2, 5.0);
            let c = rng.range(0.3, 3.0);
            let area = rng.range(0.2, 4.0);
            let law = DamageLaw::quadratic(alpha).unwrap();
            let a = ElasticTensor::scaled_identity(c).unwrap();
            let smax = sigma_max(&law, &a, area);
            let envelope = 2.0 * num::sqrt(alpha * law.psi0() / a.kappa());
            assert!(smax > 0.0);
            assert!(smax < envelope, "smax {smax} envelope {envelope}");
        }
    }

    #[test]
    fn sigma_max_monotone_in_alpha() {
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let s1 = sigma_max(&DamageLaw::quadratic(1.0).unwrap(), &a, 1.0);
        let s4 = sigma_max(&DamageLaw::quadratic(4.0).unwrap(), &a, 1.0);
        assert!(s4 >= s1 - 1e-12);
    }

    #[test]
    fn envelope_value_kappa4() {
        // kappa = 4, alpha = 1, psi0 = 1 -> envelope = 1.
        let a = ElasticTensor::scaled_identity(4.0).unwrap();
        let law = DamageLaw::quadratic(1.0).unwrap();
        let envelope = 2.0 * num::sqrt(law.alpha() * law.psi0() / a.kappa());
        assert!(num::abs(envelope - 1.0) < 1e-15);
        assert!(sigma_max(&law, &a, 1.0) < envelope);
    }

    #[test]
    fn bound_constant_limits() {
        let law = DamageLaw::quadratic(1.0).unwrap();
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        let smax = sigma_max(&law, &a, 1.0);
        // σ -> 0 gives C -> 1.
        let c0 = energy_bound_constant(smax * 1e-9, &law, &a, 1.0).unwrap();
        assert!(num::abs(c0 - 1.0) < 1e-6);
        let c_half = energy_bound_constant(0.5 * smax, &law, &a, 1.0).unwrap();
        let c_hi = energy_bound_constant(0.99 * smax, &law, &a, 1.0).unwrap();
        assert!(c_half > 1.0 && c_half.is_finite());
        assert!(c_hi > c_half);
        assert!(matches!(
            energy_bound_constant(smax, &law, &a, 1.0),
            Err(Error::InfeasibleSigma { .. })
        ));
        // Non-decreasing along a σ sweep.
        let mut prev = 1.0;
        for i in 1..20 {
            let s = smax * i as f64 / 20.0;
            let c = energy_bound_constant(s, &law, &a, 1.0).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn degenerate_law_reports_zero_threshold() {
        let law = DamageLaw::tabulated(1.0, vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(law.is_degenerate());
        let a = ElasticTensor::scaled_identity(1.0).unwrap();
        assert_eq!(sigma_max(&law, &a, 1.0), 0.0);
        let (ca, cb) = coefficients(&law);
        assert_eq!((ca, cb), (0.0, 0.0));
    }

    #[test]
    fn user_kappa_validation() {
        let a = ElasticTensor::isotropic(1.0, 2.0).unwrap();
        assert!(a.with_kappa(2.0, 1).is_err()); // true kappa is 3
        let a = ElasticTensor::isotropic(1.0, 2.0).unwrap();
        assert!(a.with_kappa(3.5, 1).is_ok());
    }
}
