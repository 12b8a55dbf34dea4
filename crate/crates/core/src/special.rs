//! Special-function kernel: Gamma, unit-sphere volume, Gauss ₂F₁ on `z ≤ 0`,
//! and the spherical functions `Φ_λ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{hypergeometric_parameters, variable_map, ModelParams};
use crate::sum::ComplexKahanSum;

/// Default absolute tolerance of ₂F₁ evaluation.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default ceiling on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 200_000;

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("gamma argument must be positive", x));
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1)/x keeps the Lanczos sum in its accurate range
        return Ok(lanczos(x + 1.0) / x);
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// `ω_{n−1} = vol(S^{n−1}) = 2π^{n/2}/Γ(n/2)`.
pub fn sphere_surface_constant(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(domain(
            "sphere dimension n must be at least 2",
            f64::from(n),
        ));
    }
    let half = 0.5 * f64::from(n);
    Ok(2.0 * PI.powf(half) / gamma_fn(half)?)
}

/// Parameters `(a, b; c)` of ₂F₁ with complex `a, b` and real `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricParams {
    a: Complex64,
    b: Complex64,
    c: f64,
}

impl HypergeometricParams {
    pub fn new(a: Complex64, b: Complex64, c: f64) -> Result<Self> {
        if !(c > 0.0) && c == c.trunc() {
            return Err(domain("c must not be a non-positive integer", c));
        }
        if !c.is_finite() {
            return Err(domain("c must be finite", c));
        }
        Ok(Self { a, b, c })
    }

    pub fn real(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0), c)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Parameters `(a, b, a + b + 1 − c)` satisfied by `u(1 − z)` when `u` solves the equation for `self`.
    ///
    /// The third parameter is returned complex; it is real for conjugate `a, b`.
    pub fn reflected_c(&self) -> Complex64 {
        self.a + self.b + 1.0 - self.c
    }
}

/// A ₂F₁ value together with the number of series terms and a truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub value: Complex64,
    pub terms_used: usize,
    pub est_error: f64,
}

/// ₂F₁(a, b; c; z) for `z ≤ 0`, through the Pfaff transformation
/// `₂F₁(a, b; c; z) = (1 − z)^{−a} ₂F₁(a, c − b; c; z/(z − 1))`.
pub fn gauss_2f1(hp: &HypergeometricParams, z: f64, tol: f64) -> Result<EvalReport> {
    gauss_2f1_with_limit(hp, z, tol, DEFAULT_MAX_TERMS)
}

pub fn gauss_2f1_with_limit(
    hp: &HypergeometricParams,
    z: f64,
    tol: f64,
    max_terms: usize,
) -> Result<EvalReport> {
    if z > 0.0 || z.is_nan() {
        return Err(domain("z must be non-positive", z));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive", tol));
    }
    if z == 0.0 {
        return Ok(EvalReport {
            value: Complex64::new(1.0, 0.0),
            terms_used: 0,
            est_error: 0.0,
        });
    }
    let w = z / (z - 1.0);
    let prefactor = (-hp.a * (-z).ln_1p()).exp();
    let scale = prefactor.norm();
    let series = power_series(
        hp.a,
        hp.c - hp.b,
        Complex64::new(hp.c, 0.0),
        w,
        tol / scale.max(f64::MIN_POSITIVE),
        max_terms,
    )?;
    Ok(EvalReport {
        value: prefactor * series.value,
        terms_used: series.terms_used,
        est_error: scale * series.est_error,
    })
}

/// The defining power series of ₂F₁, valid for `|z| < 1`; no transformation applied.
pub fn gauss_2f1_series(
    hp: &HypergeometricParams,
    z: f64,
    tol: f64,
    max_terms: usize,
) -> Result<EvalReport> {
    if !(z.abs() < 1.0) {
        return Err(domain("raw series requires |z| < 1", z));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive", tol));
    }
    power_series(hp.a, hp.b, Complex64::new(hp.c, 0.0), z, tol, max_terms)
}

// Σ (α)_k (β)_k / ((γ)_k k!) x^k with a ratio-based tail estimate.
fn power_series(
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    x: f64,
    tol: f64,
    max_terms: usize,
) -> Result<EvalReport> {
    let mut sum = ComplexKahanSum::default();
    let mut term = Complex64::new(1.0, 0.0);
    sum.add(term);
    let ax = x.abs();
    for k in 0..max_terms {
        let kf = k as f64;
        let ratio = (alpha + kf) * (beta + kf) / ((gamma + kf) * (kf + 1.0)) * x;
        let next = term * ratio;
        if next == Complex64::new(0.0, 0.0) {
            return Ok(EvalReport {
                value: sum.value(),
                terms_used: k + 1,
                est_error: 0.0,
            });
        }
        sum.add(next);
        term = next;
        // Later ratios approach |x| from below once k exceeds the parameter scale.
        let rho = ratio.norm().max(ax);
        if rho < 1.0 {
            let tail = term.norm() * rho / (1.0 - rho);
            let settled = kf + 1.0 > (alpha.norm() + beta.norm() + gamma.norm());
            if settled && tail <= tol {
                return Ok(EvalReport {
                    value: sum.value(),
                    terms_used: k + 2,
                    est_error: tail,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        terms: max_terms,
        w: x,
    })
}

/// Full ₂F₁ report for `Φ_λ(r)`.
pub fn spherical_function_report(
    p: &ModelParams,
    lambda: f64,
    r: f64,
    tol: f64,
) -> Result<EvalReport> {
    spherical_function_report_with_limit(p, lambda, r, tol, DEFAULT_MAX_TERMS)
}

pub fn spherical_function_report_with_limit(
    p: &ModelParams,
    lambda: f64,
    r: f64,
    tol: f64,
    max_terms: usize,
) -> Result<EvalReport> {
    let z = variable_map(p, r)?;
    gauss_2f1_with_limit(&hypergeometric_parameters(p, lambda), z, tol, max_terms)
}

/// Spherical function `Φ_λ(r) = ₂F₁(a, b; n/2; −sinh²(ℓr/2))`, normalized to `Φ_λ(0) = 1`.
pub fn spherical_function(p: &ModelParams, lambda: f64, r: f64, tol: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(1.0);
    }
    Ok(spherical_function_report(p, lambda, r, tol)?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma_fn(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn gamma_matches_recursion_oracle() {
        // Γ(3.7) = 2.7 · 1.7 · Γ(1.7)
        let oracle = 2.7 * 1.7 * gamma_fn(1.7).unwrap();
        assert_relative_eq!(gamma_fn(3.7).unwrap(), oracle, max_relative = 1e-13);
        // integers up to 30 against factorials
        let mut fact = 1.0f64;
        for k in 1..30u32 {
            assert_relative_eq!(gamma_fn(f64::from(k)).unwrap(), fact, max_relative = 1e-12);
            fact *= f64::from(k);
        }
        // recursion across [0.5, 30]
        let mut x = 0.5;
        while x < 29.0 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            x += 0.173;
        }
    }

    #[test]
    fn sphere_constants() {
        assert_relative_eq!(
            sphere_surface_constant(2).unwrap(),
            2.0 * PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            sphere_surface_constant(3).unwrap(),
            4.0 * PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            sphere_surface_constant(4).unwrap(),
            2.0 * PI * PI,
            max_relative = 1e-14
        );
        assert!(sphere_surface_constant(1).is_err());
        // ω_{n} = 2π ω_{n−2}/(n−1) in terms of the sphere S^{n}
        for n in 4..20u32 {
            let lhs = sphere_surface_constant(n).unwrap();
            let rhs = 2.0 * PI * sphere_surface_constant(n - 2).unwrap() / f64::from(n - 2);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn f21_at_origin() {
        let hp =
            HypergeometricParams::new(Complex64::new(0.3, 1.1), Complex64::new(0.3, -1.1), 2.5)
                .unwrap();
        assert_eq!(
            gauss_2f1(&hp, 0.0, 1e-12).unwrap().value,
            Complex64::new(1.0, 0.0)
        );
        assert!(gauss_2f1(&hp, 0.1, 1e-12).is_err());
    }

    #[test]
    fn f21_logarithm_identity() {
        let hp = HypergeometricParams::real(1.0, 1.0, 2.0).unwrap();
        let v = gauss_2f1(&hp, -1.0, 1e-14).unwrap();
        assert!((v.value.re - std::f64::consts::LN_2).abs() < 1e-13);
        for &z in &[-0.01, -0.3, -2.0, -10.0, -100.0] {
            let v = gauss_2f1(&hp, z, 1e-14).unwrap();
            let exact = -(-z).ln_1p() / z;
            assert!((v.value.re - exact).abs() < 1e-12, "z={z}");
        }
        // raw-series oracle at small |z|
        let raw = gauss_2f1_series(&hp, -0.25, 1e-15, 10_000).unwrap();
        assert!((raw.value.re - 4.0 * 1.25f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn f21_conjugate_parameters_give_real_values() {
        let a = Complex64::new(0.75, 1.9);
        let hp = HypergeometricParams::new(a, a.conj(), 3.5).unwrap();
        for &z in &[-0.2, -1.0, -5.0, -50.0] {
            let v = gauss_2f1(&hp, z, 1e-12).unwrap();
            assert!(v.value.im.abs() <= 1e-12, "z={z}: {}", v.value.im);
            assert!(v.est_error >= 0.0);
        }
    }

    #[test]
    fn f21_pfaff_agrees_with_raw_series() {
        let tol = 1e-13;
        let params = [
            HypergeometricParams::new(Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5), 1.5)
                .unwrap(),
            HypergeometricParams::new(Complex64::new(2.0, 2.0), Complex64::new(2.0, -2.0), 3.5)
                .unwrap(),
            HypergeometricParams::real(1.5, -0.7, 2.25).unwrap(),
        ];
        for hp in &params {
            let mut z = -0.49;
            while z < 0.0 {
                let p = gauss_2f1(hp, z, tol).unwrap().value;
                let s = gauss_2f1_series(hp, z, tol, 100_000).unwrap().value;
                assert!((p - s).norm() <= 10.0 * tol, "z={z}: {p} vs {s}");
                z += 0.07;
            }
        }
    }

    #[test]
    fn f21_no_convergence_near_w_one() {
        let hp = HypergeometricParams::real(1.0, 1.0, 2.0).unwrap();
        let err = gauss_2f1_with_limit(&hp, -1e6, 1e-14, 1000).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { terms: 1000, .. }));
    }

    #[test]
    fn f21_polynomial_terminates() {
        // ₂F₁(−2, b; c; z) after Pfaff is a polynomial times a power
        let hp = HypergeometricParams::real(-2.0, 1.0, 3.0).unwrap();
        let z = -0.5;
        let exact =
            1.0 + (-2.0 * 1.0 / 3.0) * z + (-2.0 * -1.0 * 1.0 * 2.0) / (3.0 * 4.0 * 2.0) * z * z;
        assert!((gauss_2f1(&hp, z, 1e-14).unwrap().value.re - exact).abs() < 1e-14);
    }

    fn h3_spherical(lambda: f64, r: f64) -> f64 {
        if lambda == 0.0 {
            r / r.sinh()
        } else {
            (lambda * r).sin() / (lambda * r.sinh())
        }
    }

    #[test]
    fn spherical_function_examples() {
        let h3 = ModelParams::new(3, 2.0, 2.0).unwrap();
        let got = spherical_function(&h3, 1.3, 2.0, 1e-13).unwrap();
        assert!((got - h3_spherical(1.3, 2.0)).abs() < 1e-12);
        for &lambda in &[0.0, 0.4, 2.5] {
            assert_eq!(spherical_function(&h3, lambda, 0.0, 1e-12).unwrap(), 1.0);
            let mut r = 0.05;
            while r < 5.0 {
                let v = spherical_function(&h3, lambda, r, 1e-13).unwrap();
                assert!(
                    (v - h3_spherical(lambda, r)).abs() < 1e-11,
                    "λ={lambda} r={r}"
                );
                r += 0.25;
            }
        }
    }

    #[test]
    fn spherical_function_is_even_and_real() {
        let p = ModelParams::new(7, 1.0, 4.0).unwrap();
        for &lambda in &[0.3, 0.7, 1.9] {
            for &r in &[0.2, 1.0, 3.0] {
                let plus = spherical_function_report(&p, lambda, r, 1e-13).unwrap();
                let minus = spherical_function_report(&p, -lambda, r, 1e-13).unwrap();
                assert!((plus.value.re - minus.value.re).abs() <= 1e-12);
                assert!(plus.value.im.abs() <= 1e-12);
            }
        }
    }
}
