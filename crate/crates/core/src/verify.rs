//! Executable check battery.
//!
//! Each check produces a [`CheckResult`] with a fixed tolerance; [`run_all`] runs
//! the battery over the standard model set and collects a [`Report`]. Negative
//! controls are checks that must fail; they are reported separately.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::damek_ricci::{
    dr_normalized_entropy, einstein_constant_of, enumerate_lower_bound, enumerate_spaces,
    normalization_factor_squared,
};
use crate::error::{Error, Result};
use crate::model::{
    einstein_constant, entropy_lower_bound, entropy_of_normalized, hypergeometric_parameters,
    inverse_variable_map, normalized_model, sigma, theta, ModelParams,
};
use crate::radial_ode::{hypergeometric_residual_stencil, solve_eigen_ode, RadialSolution};
use crate::special::{gauss_2f1, spherical_function, HypergeometricParams};
use crate::transform::{ball_volume, entropy_from_sigma, entropy_from_volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64, err: &Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::INFINITY,
            tolerance,
            detail: format!("error: {err}"),
        }
    }

    fn from_result(name: String, tolerance: f64, r: Result<(f64, String)>) -> Self {
        match r {
            Ok((measured, detail)) => Self::new(name, measured, tolerance, detail),
            Err(e) => Self::failed(name, tolerance, &e),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.3e} (tol {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

pub const LEDGER_TOL: f64 = 1e-5;
pub const LEDGER_LIMITS_TOL: f64 = 1e-3;
pub const BISHOP_TOL: f64 = 1e-12;
pub const ODE_VS_2F1_TOL: f64 = 1e-6;
pub const TRANSFORMATION_TOL: f64 = 1e-5;
pub const Z_REFLECTION_TOL: f64 = 1e-8;
pub const SIGMA_ESTIMATOR_TOL: f64 = 1e-8;
pub const VOLUME_ESTIMATOR_TOL: f64 = 5e-2;
pub const BALL_VOLUME_TOL: f64 = 1e-8;

/// Kernel tolerance used wherever a check compares against `₂F₁`.
const KERNEL_TOL: f64 = 1e-14;
/// Step of the radial solver in checks.
const ODE_STEP: f64 = 1e-3;

fn ratio(p: &ModelParams, r: f64) -> Result<f64> {
    Ok(theta(p, r)? / r.powi(p.n() as i32 - 1))
}

/// Second derivative at 0 of the even function `Θ(r)/r^{n−1}` against `−κ/3`.
pub fn ledger_check(p: &ModelParams) -> CheckResult {
    let name = format!("ledger/{p}");
    let kappa = einstein_constant(p).kappa;
    let run = || -> Result<(f64, String)> {
        // central difference of an even function with value 1 at the origin
        let d2 = |h: f64| -> Result<f64> { Ok(2.0 * (ratio(p, h)? - 1.0) / (h * h)) };
        let (h1, h2) = (1e-3, 5e-4);
        let fd = (4.0 * d2(h2)? - d2(h1)?) / 3.0;
        Ok((
            (fd + kappa / 3.0).abs(),
            format!("fd2 = {fd:.10}, -kappa/3 = {:.10}", -kappa / 3.0),
        ))
    };
    CheckResult::from_result(name, LEDGER_TOL, run())
}

/// Small-`r` limits `Θ/r^{n−1} → 1`, `(Θ/r^{n−1})' → 0` and `σ − (n−1)/r → 0`,
/// each extrapolated from `r = 1e−3` and `r = 1e−4`.
pub fn ledger_limits_check(p: &ModelParams) -> CheckResult {
    let name = format!("ledger_limits/{p}");
    let run = || -> Result<(f64, String)> {
        let (r1, r2): (f64, f64) = (1e-3, 1e-4);
        let excess = |r: f64| -> Result<f64> { Ok(sigma(p, r)? - p.nm1() / r) };
        let ratio_dev = |r: f64| -> Result<f64> { Ok(ratio(p, r)? - 1.0) };
        let slope = |r: f64| -> Result<f64> { Ok(ratio(p, r)? * excess(r)?) };
        // ratio − 1 is O(r²); the other two are O(r)
        let rich = |f1: f64, f2: f64, order: i32| {
            let t = (r1 / r2).powi(order);
            (t * f2 - f1) / (t - 1.0)
        };
        let l1 = rich(ratio_dev(r1)?, ratio_dev(r2)?, 2);
        let l2 = rich(slope(r1)?, slope(r2)?, 1);
        let l3 = rich(excess(r1)?, excess(r2)?, 1);
        let worst = l1.abs().max(l2.abs()).max(l3.abs());
        Ok((
            worst,
            format!("ratio-1 = {l1:.2e}, slope = {l2:.2e}, sigma excess = {l3:.2e}"),
        ))
    };
    CheckResult::from_result(name, LEDGER_LIMITS_TOL, run())
}

/// `Θ(r) ≤ sinh^{n−1}(r)` for a Ricci-normalized model on 2000 points of `(0, 20]`.
///
/// The excess `Θ − sinh^{n−1}` is measured relative to `max(1, sinh^{n−1} r)`,
/// the scale of floating-point round-off in either side.
pub fn bishop_check(p: &ModelParams) -> Result<CheckResult> {
    let kappa = einstein_constant(p).kappa;
    let expected = -p.nm1();
    if (kappa - expected).abs() > 1e-9 * p.nm1() {
        return Err(Error::NotNormalized { kappa, expected });
    }
    let name = format!("bishop/{p}");
    let run = || -> Result<(f64, String)> {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_abs = f64::NEG_INFINITY;
        let mut at = 0.0;
        for i in 1..=2000 {
            let r = 20.0 * f64::from(i) / 2000.0;
            let s = r.sinh().powi(p.n() as i32 - 1);
            let d = theta(p, r)? - s;
            let scaled = d / s.max(1.0);
            if scaled > worst {
                worst = scaled;
                at = r;
            }
            worst_abs = worst_abs.max(d);
        }
        Ok((
            worst,
            format!("max scaled excess at r = {at}, max absolute excess = {worst_abs:.3e}"),
        ))
    };
    Ok(CheckResult::from_result(name, BISHOP_TOL, run()))
}

/// Maximum of `|Θ(r) − sinh^{n−1}(r)| / max(1, sinh^{n−1} r)` on the Bishop grid.
pub fn hyperbolic_density_deviation(p: &ModelParams) -> Result<(f64, f64)> {
    let mut scaled: f64 = 0.0;
    let mut absolute: f64 = 0.0;
    for i in 1..=2000 {
        let r = 20.0 * f64::from(i) / 2000.0;
        let s = r.sinh().powi(p.n() as i32 - 1);
        let d = (theta(p, r)? - s).abs();
        scaled = scaled.max(d / s.max(1.0));
        absolute = absolute.max(d);
    }
    Ok((scaled, absolute))
}

fn solve_for_check(
    p: &ModelParams,
    lambda: f64,
    r_max: f64,
    perturb: bool,
) -> Result<RadialSolution> {
    let sol = solve_eigen_ode(p, lambda, r_max, ODE_STEP)?;
    Ok(if perturb { sol.shifted(1e-2) } else { sol })
}

/// `r = 0.01·j`, `j = 1..=500`, with the solver's dense output.
fn comparison_grid(sol: &RadialSolution) -> Result<Vec<(f64, f64)>> {
    (1..=500)
        .map(|j| {
            let r = 0.01 * f64::from(j);
            let phi = sol
                .value_at(r)
                .ok_or_else(|| crate::error::domain("radius outside solution", r))?;
            Ok((r, phi))
        })
        .collect()
}

fn ode_vs_2f1(p: &ModelParams, lambda: f64, perturb: bool) -> Result<(f64, String)> {
    let sol = solve_for_check(p, lambda, 5.0, perturb)?;
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for (r, phi) in comparison_grid(&sol)? {
        let d = (phi - spherical_function(p, lambda, r, KERNEL_TOL)?).abs();
        if d > worst {
            worst = d;
            at = r;
        }
    }
    Ok((worst, format!("worst at r = {at}")))
}

/// `max |Φ_ode − Φ_₂F₁|` on `r = 0.01, 0.02, …, 5`.
pub fn ode_vs_2f1_check(p: &ModelParams, lambda: f64) -> CheckResult {
    let name = format!("ode_vs_2f1/{p}/lambda={lambda}");
    CheckResult::from_result(name, ODE_VS_2F1_TOL, ode_vs_2f1(p, lambda, false))
}

fn h3_closed_form(lambda: f64, r: f64) -> f64 {
    if lambda == 0.0 {
        r / r.sinh()
    } else {
        (lambda * r).sin() / (lambda * r.sinh())
    }
}

/// Both kernels against `sin(λr)/(λ sinh r)` on real hyperbolic 3-space `(3, 2, 2)`.
pub fn real_hyperbolic_closed_form_check(lambda: f64) -> CheckResult {
    let name = format!("closed_form_h3/lambda={lambda}");
    let run = || -> Result<(f64, String)> {
        let p = ModelParams::new(3, 2.0, 2.0)?;
        let sol = solve_eigen_ode(&p, lambda, 5.0, ODE_STEP)?;
        let (mut ode, mut kernel): (f64, f64) = (0.0, 0.0);
        for (r, phi) in comparison_grid(&sol)? {
            let exact = h3_closed_form(lambda, r);
            ode = ode.max((phi - exact).abs());
            kernel = kernel.max((spherical_function(&p, lambda, r, KERNEL_TOL)? - exact).abs());
        }
        Ok((ode.max(kernel), format!("ode {ode:.2e}, 2F1 {kernel:.2e}")))
    };
    CheckResult::from_result(name, ODE_VS_2F1_TOL, run())
}

/// Grid of `z` on which the transformation check evaluates the residual.
const TRANSFORMATION_Z: (f64, f64, f64) = (-2.0, -0.05, 0.01);
const TRANSFORMATION_STENCIL: f64 = 1e-2;

fn transformation(p: &ModelParams, lambda: f64, perturb: bool) -> Result<(f64, String)> {
    let (z_lo, z_hi, dz) = TRANSFORMATION_Z;
    let r_top = inverse_variable_map(p, z_lo - 2.0 * TRANSFORMATION_STENCIL)?;
    let sol = solve_for_check(p, lambda, r_top + 0.01, perturb)?;
    let hp = hypergeometric_parameters(p, lambda);
    let count = ((z_hi - z_lo) / dz).round() as usize;
    let z: Vec<f64> = (0..=count).map(|i| z_lo + dz * i as f64).collect();
    let f = |z: f64| -> Result<f64> {
        let r = inverse_variable_map(p, z)?;
        sol.value_at(r)
            .ok_or_else(|| crate::error::domain("radius outside solution", r))
    };
    let res = hypergeometric_residual_stencil(&hp, f, &z, TRANSFORMATION_STENCIL)?;
    Ok((
        res,
        format!("z in [{z_lo}, {z_hi}], step {dz}, stencil {TRANSFORMATION_STENCIL}"),
    ))
}

/// Residual of the hypergeometric equation for `f(z) = Φ_ode(r(z))`, `z = −sinh²(ℓr/2)`.
pub fn transformation_check(p: &ModelParams, lambda: f64) -> CheckResult {
    let name = format!("transformation/{p}/lambda={lambda}");
    CheckResult::from_result(name, TRANSFORMATION_TOL, transformation(p, lambda, false))
}

/// Reflection grid: `z ∈ [1.05, 2]`, so `1 − z` stays on the kernel's axis `[−1, −0.05]`.
const REFLECTION_Z: (f64, f64, usize) = (1.05, 2.0, 95);
const REFLECTION_STENCIL: f64 = 5e-3;

/// Residual of `v(z) = u(1 − z)` against `(a, b, c')`.
pub fn z_reflection_residual<U>(hp: &HypergeometricParams, c_reflected: f64, u: U) -> Result<f64>
where
    U: Fn(f64) -> Result<f64>,
{
    let reflected = HypergeometricParams::new(hp.a(), hp.b(), c_reflected)?;
    let (lo, hi, steps) = REFLECTION_Z;
    let z: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    hypergeometric_residual_stencil(&reflected, |z| u(1.0 - z), &z, REFLECTION_STENCIL)
}

fn reflected_c_real(hp: &HypergeometricParams) -> Result<f64> {
    let c = hp.reflected_c();
    if c.im.abs() > 1e-12 * c.re.abs().max(1.0) {
        return Err(crate::error::domain("a + b + 1 − c must be real", c.im));
    }
    Ok(c.re)
}

/// `u = ₂F₁(a, b; c; ·)` sampled on `[−1, −0.05]` must make `u(1 − z)` solve the
/// equation with parameters `(a, b, a + b + 1 − c)`.
pub fn z_reflection_check(hp: &HypergeometricParams) -> CheckResult {
    let name = format!("z_reflection/a={},b={},c={}", hp.a(), hp.b(), hp.c());
    let run = || -> Result<(f64, String)> {
        let c1 = reflected_c_real(hp)?;
        let u = |x: f64| Ok(gauss_2f1(hp, x, KERNEL_TOL)?.value.re);
        Ok((z_reflection_residual(hp, c1, u)?, format!("c' = {c1}")))
    };
    CheckResult::from_result(name, Z_REFLECTION_TOL, run())
}

/// `₂F₁(1, 1; 2; x) = −ln(1 − x)/x`.
pub fn log_closed_form(x: f64) -> f64 {
    -(-x).ln_1p() / x
}

/// Reflection residual of the closed form `−ln(1 − x)/x`; with `wrong_c` the
/// original `c = 2` is used instead of `a + b + 1 − c = 1`.
pub fn z_reflection_closed_form_check(wrong_c: bool) -> CheckResult {
    let name = if wrong_c {
        "z_reflection/closed_form_log/wrong_c".to_string()
    } else {
        "z_reflection/closed_form_log".to_string()
    };
    let run = || -> Result<(f64, String)> {
        let hp = HypergeometricParams::real(1.0, 1.0, 2.0)?;
        let c1 = if wrong_c {
            hp.c()
        } else {
            reflected_c_real(&hp)?
        };
        let res = z_reflection_residual(&hp, c1, |x| Ok(log_closed_form(x)))?;
        Ok((res, format!("c' = {c1}")))
    };
    CheckResult::from_result(name, Z_REFLECTION_TOL, run())
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, width: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Location of the minimum of the normalized entropy over `ℓ ∈ (0, 4]` and its value.
pub fn entropy_minimizer(n: u32) -> Result<(f64, f64)> {
    let f = |ell: f64| entropy_of_normalized(ell, n).unwrap_or(f64::INFINITY);
    let ell = golden_section_min(f, 1e-3, 4.0, 1e-10);
    Ok((ell, entropy_of_normalized(ell, n)?))
}

/// `ℓ_i = i/100` for `i = 10..=400`.
pub fn default_ell_grid() -> Vec<f64> {
    (10..=400).map(|i| f64::from(i) / 100.0).collect()
}

/// Normalized-entropy scan: lower bound on the grid, minimizer at `√2`, and
/// `Q ≤ n−1` exactly on `[1, 2]` with `Q > n−1` outside.
pub fn entropy_bound_scan(n: u32, ell_grid: &[f64]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let lower = entropy_lower_bound(n);
    let upper = f64::from(n - 1);

    let values: Result<Vec<f64>> = ell_grid
        .iter()
        .map(|&l| entropy_of_normalized(l, n))
        .collect();
    match values {
        Ok(values) => {
            let deficit = values.iter().map(|q| lower - q).fold(0.0, f64::max);
            out.push(CheckResult::new(
                format!("entropy_scan/n={n}/lower_bound"),
                deficit,
                1e-12,
                format!("{} grid points", values.len()),
            ));
            let violations = ell_grid
                .iter()
                .zip(&values)
                .filter(|(&l, &q)| {
                    if (1.0..=2.0).contains(&l) {
                        q > upper
                    } else {
                        q <= upper
                    }
                })
                .count();
            out.push(CheckResult::new(
                format!("entropy_scan/n={n}/upper_bound"),
                violations as f64,
                0.0,
                "grid points violating Q <= n-1 exactly on [1, 2]".to_string(),
            ));
        }
        Err(e) => out.push(CheckResult::failed(
            format!("entropy_scan/n={n}/grid"),
            0.0,
            &e,
        )),
    }

    match entropy_minimizer(n) {
        Ok((ell, q)) => {
            out.push(CheckResult::new(
                format!("entropy_scan/n={n}/argmin"),
                (ell - SQRT_2).abs(),
                1e-6,
                format!("ell* = {ell:.12}"),
            ));
            out.push(CheckResult::new(
                format!("entropy_scan/n={n}/min"),
                (q - lower).abs(),
                1e-10,
                format!("Q* = {q:.15}"),
            ));
        }
        Err(e) => out.push(CheckResult::failed(
            format!("entropy_scan/n={n}/argmin"),
            1e-6,
            &e,
        )),
    }
    out
}

/// `|σ(40/ℓ) − Q|`.
pub fn sigma_estimator_check(p: &ModelParams) -> CheckResult {
    let name = format!("entropy_sigma/{p}");
    let run = || -> Result<(f64, String)> {
        let est = entropy_from_sigma(p, 40.0 / p.ell())?;
        Ok(((est - p.q()).abs(), format!("estimate {est:.15}")))
    };
    CheckResult::from_result(name, SIGMA_ESTIMATOR_TOL, run())
}

/// `|log Vol B(80/ℓ) / (80/ℓ) − Q|`.
pub fn volume_estimator_check(p: &ModelParams) -> CheckResult {
    let name = format!("entropy_volume/{p}");
    let run = || -> Result<(f64, String)> {
        let est = entropy_from_volume(p, 80.0 / p.ell())?;
        Ok(((est - p.q()).abs(), format!("estimate {est:.10}")))
    };
    CheckResult::from_result(name, VOLUME_ESTIMATOR_TOL, run())
}

/// Ball volume of `(3, 2, 2)` against `π(sinh 2r − 2r)`.
pub fn ball_volume_check(r: f64) -> CheckResult {
    let name = format!("ball_volume_h3/r={r}");
    let run = || -> Result<(f64, String)> {
        let p = ModelParams::new(3, 2.0, 2.0)?;
        let exact = std::f64::consts::PI * ((2.0 * r).sinh() - 2.0 * r);
        let got = ball_volume(&p, r, 1e-14)?;
        Ok(((got - exact).abs(), format!("{got} vs {exact}")))
    };
    CheckResult::from_result(name, BALL_VOLUME_TOL, run())
}

/// The four lower-bound Damek–Ricci spaces for `max_m = 64`.
pub fn dr_lower_bound_check() -> CheckResult {
    let expected = vec![(1, 2), (2, 4), (4, 8), (8, 16)];
    let run = || -> Result<(f64, String)> {
        let got = enumerate_lower_bound(64)?;
        Ok((if got == expected { 0.0 } else { 1.0 }, format!("{got:?}")))
    };
    CheckResult::from_result("damek_ricci/lower_bound_cases".to_string(), 0.0, run())
}

/// Normalized entropies of spaces with `m ≤ 8`, `j ≤ 2` lie in the bound band,
/// touching the lower end exactly when `k = 2m`.
pub fn dr_bound_check() -> CheckResult {
    let run = || -> Result<(f64, String)> {
        let mut worst: f64 = 0.0;
        let mut mismatched = Vec::new();
        for e in enumerate_spaces(8, 2, 1e-12)? {
            let (k, m, n) = (e.space.k, e.space.m, e.space.n);
            let q = dr_normalized_entropy(k, m)?;
            let lower = entropy_lower_bound(n);
            let upper = f64::from(n - 1);
            worst = worst.max(lower - q).max(q - upper);
            let at_lower = (q - lower).abs() <= 1e-12;
            if at_lower != (k == 2 * u64::from(m)) {
                mismatched.push((m, k));
            }
        }
        let measured = if mismatched.is_empty() {
            worst.max(0.0)
        } else {
            f64::INFINITY
        };
        Ok((measured, format!("equality mismatches: {mismatched:?}")))
    };
    CheckResult::from_result("damek_ricci/bounds".to_string(), 1e-12, run())
}

/// `κ = −(m + k/4)` to machine precision and `c² = (k/4 + m)/(k + m)` to `1e−14`.
pub fn dr_consistency_checks() -> Vec<CheckResult> {
    let run = || -> Result<(f64, f64)> {
        let (mut kappa, mut c2): (f64, f64) = (0.0, 0.0);
        for e in enumerate_spaces(8, 2, 1e-12)? {
            let exact = e.space.ricci_constant();
            kappa = kappa.max((einstein_constant_of(&e.space) - exact).abs() / exact.abs());
            let (got, closed) = normalization_factor_squared(&e.space)?;
            c2 = c2.max((got - closed).abs());
        }
        Ok((kappa, c2))
    };
    match run() {
        Ok((kappa, c2)) => vec![
            CheckResult::new(
                "damek_ricci/einstein_constant",
                kappa,
                f64::EPSILON,
                "relative",
            ),
            CheckResult::new("damek_ricci/normalization_factor", c2, 1e-14, "absolute"),
        ],
        Err(e) => vec![CheckResult::failed("damek_ricci/consistency", 0.0, &e)],
    }
}

/// Models covering real hyperbolic 3-space, ℂH², the 7-dimensional Damek–Ricci
/// space, a 13-dimensional case and the lower-bound configuration.
pub fn standard_models() -> Vec<ModelParams> {
    [
        (3, 2.0, 2.0),
        (4, 1.0, 2.0),
        (7, 1.0, 4.0),
        (13, 1.0, 8.0),
        (4, SQRT_2, 2.0 * SQRT_2),
    ]
    .iter()
    .map(|&(n, l, q)| ModelParams::new(n, l, q).expect("standard models are valid"))
    .collect()
}

pub const STANDARD_LAMBDAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const BISHOP_ELLS: [f64; 5] = [1.0, 1.2, SQRT_2, 1.8, 2.0];
pub const BISHOP_DIMS: [u32; 3] = [3, 4, 7];
pub const SCAN_DIMS: [u32; 4] = [3, 4, 7, 13];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Run only the family with this name, or else checks whose name contains it.
    pub filter: Option<String>,
    /// Models for the per-model checks; empty means [`standard_models`].
    pub models: Vec<ModelParams>,
    /// Test hook: shift every radial solution by `0.01`, which must fail the suite.
    pub perturb: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
    /// Negative controls; each is expected to fail its tolerance.
    pub controls: Vec<CheckResult>,
    pub all_passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        for c in &self.controls {
            let verdict = if c.passed {
                "UNEXPECTED PASS"
            } else {
                "rejected"
            };
            writeln!(
                f,
                "control {}: {verdict}, measured {:.3e} (tol {:.1e})",
                c.name, c.measured, c.tolerance
            )?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(
            f,
            "{passed}/{} checks passed; overall {}",
            self.checks.len(),
            if self.all_passed { "PASS" } else { "FAIL" }
        )
    }
}

type Job = Box<dyn Fn() -> Vec<CheckResult> + Send + Sync>;

struct Planned {
    family: &'static str,
    control: bool,
    job: Job,
}

fn plan(models: &[ModelParams], perturb: bool) -> Vec<Planned> {
    let mut jobs: Vec<Planned> = Vec::new();
    let mut add = |family: &'static str, control: bool, job: Job| {
        jobs.push(Planned {
            family,
            control,
            job,
        })
    };

    for &p in models {
        add("ledger", false, Box::new(move || vec![ledger_check(&p)]));
        add(
            "ledger_limits",
            false,
            Box::new(move || vec![ledger_limits_check(&p)]),
        );
        add(
            "entropy_sigma",
            false,
            Box::new(move || vec![sigma_estimator_check(&p)]),
        );
        add(
            "entropy_volume",
            false,
            Box::new(move || vec![volume_estimator_check(&p)]),
        );
        for &lambda in &STANDARD_LAMBDAS {
            add(
                "ode_vs_2f1",
                false,
                Box::new(move || {
                    let name = format!("ode_vs_2f1/{p}/lambda={lambda}");
                    vec![CheckResult::from_result(
                        name,
                        ODE_VS_2F1_TOL,
                        ode_vs_2f1(&p, lambda, perturb),
                    )]
                }),
            );
            add(
                "transformation",
                false,
                Box::new(move || {
                    let name = format!("transformation/{p}/lambda={lambda}");
                    vec![CheckResult::from_result(
                        name,
                        TRANSFORMATION_TOL,
                        transformation(&p, lambda, perturb),
                    )]
                }),
            );
        }
    }
    for &lambda in &STANDARD_LAMBDAS {
        add(
            "closed_form_h3",
            false,
            Box::new(move || vec![real_hyperbolic_closed_form_check(lambda)]),
        );
    }
    for &n in &BISHOP_DIMS {
        for &ell in &BISHOP_ELLS {
            add(
                "bishop",
                false,
                Box::new(move || {
                    let name = format!("bishop/n={n}/ell={ell}");
                    match normalized_model(ell, n).and_then(|p| bishop_check(&p)) {
                        Ok(c) => vec![c],
                        Err(e) => vec![CheckResult::failed(name, BISHOP_TOL, &e)],
                    }
                }),
            );
        }
    }
    for &n in &SCAN_DIMS {
        add(
            "entropy_scan",
            false,
            Box::new(move || entropy_bound_scan(n, &default_ell_grid())),
        );
    }
    for r in [1.0, 2.0, 5.0] {
        add(
            "ball_volume_h3",
            false,
            Box::new(move || vec![ball_volume_check(r)]),
        );
    }
    add(
        "z_reflection",
        false,
        Box::new(|| vec![z_reflection_closed_form_check(false)]),
    );
    add(
        "z_reflection",
        false,
        Box::new(|| {
            let p = ModelParams::new(4, 1.0, 2.0).expect("valid model");
            vec![z_reflection_check(&hypergeometric_parameters(&p, 0.0))]
        }),
    );
    add(
        "z_reflection",
        true,
        Box::new(|| vec![z_reflection_closed_form_check(true)]),
    );
    add(
        "ode_vs_2f1",
        true,
        Box::new(|| {
            let p = ModelParams::new(4, 1.0, 2.0).expect("valid model");
            let name = format!("ode_vs_2f1/{p}/lambda=1/shifted");
            vec![CheckResult::from_result(
                name,
                ODE_VS_2F1_TOL,
                ode_vs_2f1(&p, 1.0, true),
            )]
        }),
    );
    add(
        "damek_ricci",
        false,
        Box::new(|| vec![dr_lower_bound_check()]),
    );
    add("damek_ricci", false, Box::new(|| vec![dr_bound_check()]));
    add("damek_ricci", false, Box::new(dr_consistency_checks));
    jobs
}

/// Names of the check families, in canonical order.
pub fn families() -> Vec<&'static str> {
    let mut f: Vec<_> = plan(&standard_models(), false)
        .iter()
        .map(|p| p.family)
        .collect();
    f.sort_unstable();
    f.dedup();
    f
}

/// Run the battery. Checks run on all available cores; the report is sorted by name.
pub fn run_all(config: &VerifyConfig) -> Report {
    let models = if config.models.is_empty() {
        standard_models()
    } else {
        config.models.clone()
    };
    let jobs = plan(&models, config.perturb);
    let family_filter = config
        .filter
        .as_deref()
        .filter(|f| jobs.iter().any(|j| j.family == *f));

    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Vec<(bool, CheckResult)>> = Vec::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(job) = jobs.get(i) else { break };
                        if family_filter.is_some_and(|f| f != job.family) {
                            continue;
                        }
                        for c in (job.job)() {
                            done.push((job.control, c));
                        }
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            slots.push(h.join().expect("check thread panicked"));
        }
    });

    let mut checks = Vec::new();
    let mut controls = Vec::new();
    for (control, c) in slots.into_iter().flatten() {
        let keep = match (&config.filter, family_filter) {
            (_, Some(_)) | (None, None) => true,
            (Some(f), None) => c.name.contains(f.as_str()),
        };
        if !keep {
            continue;
        }
        if control {
            controls.push(c);
        } else {
            checks.push(c);
        }
    }
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    controls.sort_by(|a, b| a.name.cmp(&b.name));
    let all_passed = checks.iter().all(|c| c.passed) && controls.iter().all(|c| !c.passed);
    Report {
        checks,
        controls,
        all_passed,
    }
}
