//! Quadrature-backed integrals: spherical Fourier transform of compactly
//! supported radial profiles, geodesic-ball volumes, and two independent
//! estimators of the volume entropy.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{log_theta, sigma, theta, ModelParams};
use crate::radial_ode::{solve_eigen_ode, RadialSolution};
use crate::special::{sphere_surface_constant, spherical_function};
use crate::sum::KahanSum;

/// Panel budget of [`quadrature`].
pub const MAX_PANELS: usize = 20_000;

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of an adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub err: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        err: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive 7/15-point Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The panel with the largest `|K15 − G7|` is bisected until the summed estimate
/// drops below the absolute tolerance `tol`. Panel values are combined with
/// compensated summation in left-to-right order, so results do not depend on the
/// refinement history beyond the final panel set.
fn finite_panel(p: Panel) -> Result<Panel> {
    if p.value.is_finite() && p.err.is_finite() {
        Ok(p)
    } else {
        Err(domain("integrand is not finite on panel starting at", p.a))
    }
}

pub fn quadrature<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(domain("quadrature needs finite a < b", b - a));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive", tol));
    }
    let mut heap = BinaryHeap::new();
    let first = finite_panel(gauss_kronrod(&mut f, a, b))?;
    let mut total_err = first.err;
    heap.push(first);
    while total_err > tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::MaxSubdivisions {
                subdivisions: heap.len(),
                err: total_err,
                tol,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::MaxSubdivisions {
                subdivisions: heap.len() + 1,
                err: total_err,
                tol,
            });
        }
        let left = finite_panel(gauss_kronrod(&mut f, worst.a, mid))?;
        let right = finite_panel(gauss_kronrod(&mut f, mid, worst.b))?;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        if total_err <= tol {
            // guard against drift in the running error total
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = KahanSum::default();
    let mut err = KahanSum::default();
    for p in &panels {
        value.add(p.value);
        err.add(p.err);
    }
    Ok(Quadrature {
        value: value.value(),
        err: err.value(),
        panels: panels.len(),
    })
}

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Radial profile `F(r)` supported on `[0, R)`.
///
/// `F` is understood as an even function of `r`; only `r ≥ 0` is ever queried.
#[derive(Clone)]
pub struct RadialProfile {
    support_radius: f64,
    eval: Arc<ProfileFn>,
    breakpoints: Vec<f64>,
    description: String,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("support_radius", &self.support_radius)
            .field("description", &self.description)
            .finish()
    }
}

impl RadialProfile {
    pub fn new<F>(support_radius: f64, eval: F, description: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(domain("support radius must be positive", support_radius));
        }
        Ok(Self {
            support_radius,
            eval: Arc::new(eval),
            breakpoints: Vec::new(),
            description: description.into(),
        })
    }

    /// `exp(1 − 1/(1 − (r/R)²))` on `[0, R)`.
    pub fn bump(support_radius: f64) -> Result<Self> {
        let r_cap = support_radius;
        Self::new(
            support_radius,
            move |r| {
                let s = r / r_cap;
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            },
            format!("bump:R={support_radius}"),
        )
    }

    pub fn zero(support_radius: f64) -> Result<Self> {
        Self::new(support_radius, |_| 0.0, "zero")
    }

    /// Piecewise-linear profile through `(r, F(r))` samples, zero beyond the last
    /// radius and constant below the first.
    pub fn sampled(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::GridTooShort {
                len: points.len(),
                min: 2,
            });
        }
        if points[0].0 < 0.0 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::NonMonotoneGrid);
        }
        let support = points.last().expect("non-empty").0;
        let breakpoints = points
            .iter()
            .map(|p| p.0)
            .filter(|&r| r > 0.0 && r < support)
            .collect();
        let table = points.clone();
        let mut profile = Self::new(
            support,
            move |r| {
                if r <= table[0].0 {
                    return table[0].1;
                }
                let i = table.partition_point(|p| p.0 <= r);
                if i >= table.len() {
                    return 0.0;
                }
                let (r0, f0) = table[i - 1];
                let (r1, f1) = table[i];
                f0 + (f1 - f0) * (r - r0) / (r1 - r0)
            },
            format!("sampled:{} points", points.len()),
        )?;
        profile.breakpoints = breakpoints;
        Ok(profile)
    }

    /// `α·F₁ + F₂`.
    pub fn combine(alpha: f64, f1: &RadialProfile, f2: &RadialProfile) -> Self {
        let (g1, g2) = (f1.clone(), f2.clone());
        let mut breakpoints: Vec<f64> = f1
            .breakpoints
            .iter()
            .chain(&f2.breakpoints)
            .copied()
            .collect();
        let (r1, r2) = (f1.support_radius, f2.support_radius);
        if r1 != r2 {
            breakpoints.push(r1.min(r2));
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self {
            support_radius: r1.max(r2),
            eval: Arc::new(move |r| alpha * g1.eval(r) + g2.eval(r)),
            breakpoints,
            description: format!("{alpha}*({}) + ({})", f1.description, f2.description),
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r.abs() >= self.support_radius {
            0.0
        } else {
            (self.eval)(r.abs())
        }
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![0.0];
        edges.extend(
            self.breakpoints
                .iter()
                .copied()
                .filter(|&r| r > 0.0 && r < self.support_radius),
        );
        edges.push(self.support_radius);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Number of quadrature nodes served by each spherical-function kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelUsage {
    pub hypergeometric: usize,
    pub ode: usize,
}

/// `f̂(λ)` with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformResult {
    pub lambda: f64,
    pub value: f64,
    pub quad_error: f64,
    pub kernels: KernelUsage,
}

// ODE step used when the hypergeometric series gives up.
const FALLBACK_STEP: f64 = 1e-3;

/// Spherical Fourier transform `f̂(λ) = ω_{n−1} ∫₀^R F(r) Φ_λ(r) Θ(r) dr`.
///
/// `Φ_λ` comes from the hypergeometric kernel; nodes where the series does not
/// converge are served by an ODE solution on `[0, R]` computed on first need.
pub fn spherical_fourier(
    p: &ModelParams,
    profile: &RadialProfile,
    lambda: f64,
    tol: f64,
) -> Result<TransformResult> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive", tol));
    }
    let omega = sphere_surface_constant(p.n())?;
    let kernel_tol = (1e-2 * tol).min(1e-12);
    let fallback: RefCell<Option<RadialSolution>> = RefCell::new(None);
    let usage = RefCell::new(KernelUsage::default());
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    // w = tanh²(ℓr/2) grows with r, so the series fails beyond the first failing radius too
    let series_limit = RefCell::new(f64::INFINITY);
    let support = profile.support_radius();

    let phi = |r: f64| -> Result<f64> {
        let attempt = if r < *series_limit.borrow() {
            spherical_function(p, lambda, r, kernel_tol)
        } else {
            Err(Error::NoConvergence {
                terms: 0,
                w: f64::NAN,
            })
        };
        match attempt {
            Ok(v) => {
                usage.borrow_mut().hypergeometric += 1;
                Ok(v)
            }
            Err(Error::NoConvergence { .. }) => {
                let mut limit = series_limit.borrow_mut();
                *limit = limit.min(r);
                let mut slot = fallback.borrow_mut();
                if slot.is_none() {
                    *slot = Some(solve_eigen_ode(p, lambda, support, FALLBACK_STEP)?);
                }
                usage.borrow_mut().ode += 1;
                let sol = slot.as_ref().expect("filled above");
                sol.value_at(r).ok_or(Error::Domain {
                    what: "radius outside the fallback solution",
                    value: r,
                })
            }
            Err(e) => Err(e),
        }
    };
    let integrand = |r: f64| -> f64 {
        let fr = profile.eval(r);
        if fr == 0.0 {
            return 0.0;
        }
        match phi(r).and_then(|v| Ok(fr * v * theta(p, r)?)) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };

    let intervals = profile.intervals();
    let piece_tol = tol / omega / intervals.len() as f64;
    let mut value = KahanSum::default();
    let mut err = 0.0;
    for (a, b) in intervals {
        let q = quadrature(&integrand, a, b, piece_tol)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        value.add(q.value);
        err += q.err;
    }
    let kernels = *usage.borrow();
    Ok(TransformResult {
        lambda,
        value: omega * value.value(),
        quad_error: omega * err,
        kernels,
    })
}

/// `log Vol B(r)`; the integrand is scaled by `Θ(r)` so that large radii do not overflow.
/// `rel_tol` bounds the relative quadrature error.
pub fn log_ball_volume(p: &ModelParams, r: f64, rel_tol: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("ball radius must be positive", r));
    }
    let omega = sphere_surface_constant(p.n())?;
    let scale = log_theta(p, r)?;
    let failure = RefCell::new(None);
    let integrand = |t: f64| match log_theta(p, t) {
        Ok(l) => (l - scale).exp(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    // a coarse pass fixes the magnitude, the second meets the relative tolerance
    let coarse = quadrature(&integrand, 0.0, r, 1e-6 * r)?;
    let q = quadrature(&integrand, 0.0, r, rel_tol * coarse.value)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(omega.ln() + scale + q.value.ln())
}

/// `Vol B(r) = ω_{n−1} ∫₀^r Θ(t) dt` with relative tolerance `rel_tol`.
pub fn ball_volume(p: &ModelParams, r: f64, rel_tol: f64) -> Result<f64> {
    Ok(log_ball_volume(p, r, rel_tol)?.exp())
}

/// `σ(r_max)` as an estimate of `Q`; the error decays like `e^{−ℓ r_max}`.
pub fn entropy_from_sigma(p: &ModelParams, r_max: f64) -> Result<f64> {
    if !(r_max >= 10.0 / p.ell() * (1.0 - 1e-12)) {
        return Err(domain("entropy_from_sigma needs r_max >= 10/ell", r_max));
    }
    sigma(p, r_max)
}

/// `log Vol B(r_max) / r_max`; converges to `Q` only like `O(log r / r)`.
pub fn entropy_from_volume(p: &ModelParams, r_max: f64) -> Result<f64> {
    if !(r_max >= 20.0 / p.ell() * (1.0 - 1e-12)) {
        return Err(domain("entropy_from_volume needs r_max >= 20/ell", r_max));
    }
    Ok(log_ball_volume(p, r_max, 1e-12)? / r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn m(n: u32, ell: f64, q: f64) -> ModelParams {
        ModelParams::new(n, ell, q).unwrap()
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
        let h = (b - a) / intervals as f64;
        let mut s = f(a) + f(b);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn quadrature_basics() {
        let q = quadrature(|x| x * x, 0.0, 1.0, 1e-14).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-15);
        let q = quadrature(|_| 0.0, 0.0, 1.0, 1e-14).unwrap();
        assert_eq!(q.value, 0.0);
        let r: f64 = 2.0;
        let q = quadrature(|t: f64| t.sinh().powi(2), 0.0, r, 1e-12).unwrap();
        assert!((q.value - ((2.0 * r).sinh() / 4.0 - r / 2.0)).abs() < 1e-12);
        assert!(quadrature(|x| x, 1.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn quadrature_reports_unreachable_tolerance() {
        let err = quadrature(|x: f64| (1e6 * x).sin().signum(), 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::MaxSubdivisions { .. }), "{err:?}");
        let err = quadrature(|x: f64| (x - 0.5).abs().powf(-0.9), 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn zero_profile_transforms_to_zero() {
        let p = m(3, 2.0, 2.0);
        let t = spherical_fourier(&p, &RadialProfile::zero(2.0).unwrap(), 1.0, 1e-10).unwrap();
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn bump_transform_matches_refined_simpson() {
        let p = m(3, 2.0, 2.0);
        let bump = RadialProfile::bump(2.0).unwrap();
        let tol = 1e-10;
        let t = spherical_fourier(&p, &bump, 1.0, tol).unwrap();
        // closed-form Φ_1 on real hyperbolic 3-space
        let integrand = |r: f64| {
            if r == 0.0 {
                return 0.0;
            }
            bump.eval(r) * r.sin() / r.sinh() * r.sinh().powi(2)
        };
        let oracle = 4.0 * PI * simpson(integrand, 0.0, 2.0, 20_000);
        assert!((t.value - oracle).abs() <= 1e-7, "{} vs {oracle}", t.value);
        assert!(t.quad_error <= tol);
        assert!(t.kernels.hypergeometric > 0 && t.kernels.ode == 0);
    }

    #[test]
    fn transform_is_even_in_lambda() {
        let p = m(4, 1.0, 2.0);
        let bump = RadialProfile::bump(3.0).unwrap();
        let tol = 1e-10;
        for &lambda in &[0.3, 1.0, 2.5] {
            let a = spherical_fourier(&p, &bump, lambda, tol).unwrap();
            let b = spherical_fourier(&p, &bump, -lambda, tol).unwrap();
            assert!((a.value - b.value).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn transform_is_linear() {
        let p = m(7, 1.0, 4.0);
        let tol = 1e-9;
        let f1 = RadialProfile::bump(2.0).unwrap();
        let f2 = RadialProfile::new(1.5, |r| (1.0 - r / 1.5).powi(3) * (1.0 + r), "poly").unwrap();
        for &alpha in &[-0.7, 2.0] {
            let combo = RadialProfile::combine(alpha, &f1, &f2);
            let lhs = spherical_fourier(&p, &combo, 0.8, tol).unwrap().value;
            let rhs = alpha * spherical_fourier(&p, &f1, 0.8, tol).unwrap().value
                + spherical_fourier(&p, &f2, 0.8, tol).unwrap().value;
            assert!((lhs - rhs).abs() <= 3.0 * tol, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn transform_falls_back_to_ode() {
        // ℓ = 4 pushes w = tanh²(2r) so close to 1 that the series ceiling is hit
        let p = m(3, 4.0, 3.0);
        let profile = RadialProfile::bump(4.0).unwrap();
        let t = spherical_fourier(&p, &profile, 0.5, 1e-6).unwrap();
        assert!(t.kernels.ode > 0);
        assert!(t.kernels.hypergeometric > 0);
        assert!(t.value.is_finite());
    }

    #[test]
    fn sampled_profile_interpolates() {
        let f = RadialProfile::sampled(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]).unwrap();
        assert_eq!(f.eval(0.5), 0.75);
        assert_eq!(f.eval(1.5), 0.25);
        assert_eq!(f.eval(3.0), 0.0);
        assert!(RadialProfile::sampled(vec![(1.0, 1.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn hyperbolic_ball_volume() {
        let p = m(3, 2.0, 2.0);
        for &r in &[1.0f64, 2.0, 5.0] {
            let exact = PI * ((2.0 * r).sinh() - 2.0 * r);
            let got = ball_volume(&p, r, 1e-14).unwrap();
            assert!((got - exact).abs() <= 1e-8, "r={r}: {got} vs {exact}");
        }
    }

    #[test]
    fn ball_volume_euclidean_limit_and_monotone() {
        let p = m(7, 1.0, 4.0);
        let omega = sphere_surface_constant(7).unwrap();
        let r = 1e-3;
        let ratio = ball_volume(&p, r, 1e-12).unwrap() / (omega * r.powi(7) / 7.0);
        assert!((ratio - 1.0).abs() < 1e-5);
        let mut prev = 0.0;
        for i in 1..40 {
            let v = ball_volume(&p, 0.25 * f64::from(i), 1e-12).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn entropy_estimators() {
        let p = m(4, 1.0, 2.0);
        assert!((entropy_from_sigma(&p, 40.0).unwrap() - 2.0).abs() <= 1e-10);
        let p3 = m(3, 2.0, 2.0);
        assert!((entropy_from_sigma(&p3, 40.0).unwrap() - 2.0).abs() <= 1e-12);
        assert!(entropy_from_sigma(&p, 5.0).is_err());
        assert!(entropy_from_volume(&p, 10.0).is_err());
        assert!((entropy_from_volume(&p3, 40.0).unwrap() - 2.0).abs() <= 1e-1);
        assert!((entropy_from_volume(&p, 80.0).unwrap() - 2.0).abs() <= 5e-2);
    }

    #[test]
    fn sigma_estimator_error_decays_exponentially() {
        let p = m(5, 0.5, 1.5);
        let e = |r: f64| (entropy_from_sigma(&p, r).unwrap() - p.q()).abs().ln();
        // log-error is roughly linear in r with slope −ℓ
        let (e20, e40) = (e(20.0), e(40.0));
        assert!((e40 - e20 + 0.5 * 20.0).abs() < 0.1, "{e20} {e40}");
    }

    #[test]
    fn volume_and_sigma_estimators_approach_each_other() {
        let p = m(3, 2.0, 2.0);
        let gap = |r: f64| {
            (entropy_from_volume(&p, r).unwrap() - entropy_from_sigma(&p, r).unwrap()).abs()
        };
        let (g20, g40, g80) = (gap(20.0), gap(40.0), gap(80.0));
        assert!(g20 > g40 && g40 > g80, "{g20} {g40} {g80}");
    }
}
