//! Scalar math routines shared across the crate.
//!
//! Float functions are routed through thin wrappers so the crate builds on
//! `no_std` targets (via `libm`) without sprinkling cfg's everywhere.
//! Quadrature rules, the adaptive integrator and the golden-section search
//! live here as well.

use alloc::vec::Vec;

#[cfg(feature = "std")]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    x.hypot(y)
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[cfg(feature = "std")]
#[inline]
pub fn powf(x: f64, p: f64) -> f64 {
    x.powf(p)
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn powf(x: f64, p: f64) -> f64 {
    libm::pow(x, p)
}

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Bit-mask absolute value; avoids relying on `f64::abs` being in `core`.
#[inline]
pub fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0x7fff_ffff_ffff_ffff)
}

#[inline]
pub fn min(x: f64, y: f64) -> f64 {
    if x < y {
        x
    } else {
        y
    }
}

#[inline]
pub fn max(x: f64, y: f64) -> f64 {
    if x > y {
        x
    } else {
        y
    }
}

#[inline]
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    max(lo, min(x, hi))
}

/// Negative part `x⁻ = max(-x, 0)`.
#[inline]
pub fn neg_part(x: f64) -> f64 {
    max(-x, 0.0)
}

/// 3-point Gauss-Legendre rule on [-1, 1] (degree 5).
pub const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_9),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

/// 8-point Gauss-Legendre rule on [-1, 1] (degree 15).
pub const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// 16-point Gauss-Legendre rule on [-1, 1] (degree 31).
pub const GAUSS16: [(f64, f64); 16] = [
    (-0.989_400_934_991_649_9, 0.027_152_459_411_754_095),
    (-0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (-0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
    (-0.755_404_408_355_003_0, 0.124_628_971_255_533_87),
    (-0.617_876_244_402_643_7, 0.149_595_988_816_576_73),
    (-0.458_016_777_657_227_4, 0.169_156_519_395_002_54),
    (-0.281_603_550_779_258_9, 0.182_603_415_044_923_59),
    (-0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_59),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_54),
    (0.617_876_244_402_643_7, 0.149_595_988_816_576_73),
    (0.755_404_408_355_003_0, 0.124_628_971_255_533_87),
    (0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_095),
];

/// Integrate `f` over `[a, b]` with a composite 16-point Gauss rule on
/// `panels` equal sub-intervals.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(1);
    let w = (b - a) / n as f64;
    let mut total = 0.0;
    for p in 0..n {
        let lo = a + w * p as f64;
        let mid = lo + 0.5 * w;
        let half = 0.5 * w;
        let mut acc = 0.0;
        for &(x, wt) in GAUSS16.iter() {
            acc += wt * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Adaptive Simpson quadrature to a relative tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, 0.5 * (a + m), m);
        let right = simpson(f, m, 0.5 * (m + b), b);
        if depth == 0 || abs(left + right - whole) <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, m, b);
    let scale = max(abs(whole), 1e-300);
    recurse(f, a, b, whole, rel_tol * scale, 48)
}

/// Maximize a unimodal-after-bracketing function on `(lo, hi)`.
///
/// A dense scan with `scan_points` samples brackets the maximum, then
/// golden-section search refines the bracket below `x_tol`.
pub fn scan_maximize<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    scan_points: usize,
    x_tol: f64,
) -> (f64, f64) {
    let n = scan_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + step * i as f64;
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = if best_i == 0 { lo } else { lo + step * (best_i - 1) as f64 };
    let mut b = if best_i == n - 1 { hi } else { lo + step * (best_i + 1) as f64 };
    // Golden-section on the bracketing interval.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > x_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Richardson extrapolation of a sequence `y(t) = A + c/t + o(1/t)` sampled at
/// increasing `t`; uses the last two points.
pub fn richardson_tail(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len();
    assert!(n >= 2);
    let (t1, y1) = samples[n - 2];
    let (t2, y2) = samples[n - 1];
    (t2 * y2 - t1 * y1) / (t2 - t1)
}

/// Fit the observed order `p` in `y(h) ≈ y* + C·h^p` from three samples with a
/// constant refinement ratio, and return `(p, extrapolated y*)`.
pub fn fit_order_and_extrapolate(coarse: f64, mid: f64, fine: f64, ratio: f64) -> (f64, f64) {
    let d1 = coarse - mid;
    let d2 = mid - fine;
    if d2 == 0.0 || d1 / d2 <= 0.0 {
        // Already converged (or noise-dominated): no order information.
        return (f64::NAN, fine);
    }
    let p = ln(d1 / d2) / ln(ratio);
    let extrap = fine + d2 / (powf(ratio, p) - 1.0);
    (p, extrap)
}

/// Pairwise (cascade) summation for bit-stable deterministic totals.
pub fn pairwise_sum(values: &mut Vec<f64>) -> f64 {
    fn sum_range(v: &[f64]) -> f64 {
        match v.len() {
            0 => 0.0,
            1 => v[0],
            2 => v[0] + v[1],
            n => {
                let mid = n / 2;
                sum_range(&v[..mid]) + sum_range(&v[mid..])
            }
        }
    }
    sum_range(values.as_slice())
}
