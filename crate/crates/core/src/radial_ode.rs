//! Direct integration of the radial eigen-equation
//!
//! ```text
//! Φ'' + σ(r) Φ' + (Q²/4 + λ²) Φ = 0,   Φ(0) = 1,  Φ'(0) = 0
//! ```
//!
//! The origin is a regular singular point (`σ ~ (n−1)/r`), so the solution is
//! started from a truncated Frobenius series at a small offset and continued with
//! classical RK4. Substeps near the origin are graded so that `h·σ(r)` stays small;
//! the solution is reported on the uniform output grid `{r_start, h, 2h, …, r_max}`.
//!
//! The module also carries the finite-difference residual checkers used as
//! oracles against the hypergeometric kernel.

use crate::error::{domain, Error, Result};
use crate::model::{sigma, sigma_linear_coefficient, ModelParams};
use crate::special::HypergeometricParams;

/// Default Frobenius offset.
pub const DEFAULT_R_START: f64 = 1e-4;
/// Largest admissible step.
pub const MAX_STEP: f64 = 1e-2;
/// Largest admissible Frobenius offset.
pub const MAX_R_START: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub r_start: f64,
    /// Near the origin the step is capped at `grading · r / (n − 1)`.
    pub grading: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            r_start: DEFAULT_R_START,
            grading: 0.05,
        }
    }
}

/// `Q²/4 + λ²`.
pub fn eigenvalue(p: &ModelParams, lambda: f64) -> f64 {
    0.25 * p.q() * p.q() + lambda * lambda
}

/// Frobenius coefficients `(a₂, a₄)` of `Φ = 1 + a₂r² + a₄r⁴ + O(r⁶)`.
pub fn frobenius_coefficients(p: &ModelParams, lambda: f64) -> (f64, f64) {
    let mu = eigenvalue(p, lambda);
    let n = f64::from(p.n());
    let s1 = sigma_linear_coefficient(p);
    let a2 = -mu / (2.0 * n);
    let a4 = -a2 * (2.0 * s1 + mu) / (4.0 * (n + 2.0));
    (a2, a4)
}

/// `(Φ(r_start), Φ'(r_start))` from the degree-4 Frobenius series.
pub fn frobenius_start(p: &ModelParams, lambda: f64, r_start: f64) -> Result<(f64, f64)> {
    if !(r_start > 0.0 && r_start <= MAX_R_START) {
        return Err(domain("Frobenius offset must lie in (0, 1e-2]", r_start));
    }
    Ok(frobenius_eval(p, lambda, r_start))
}

fn frobenius_eval(p: &ModelParams, lambda: f64, r: f64) -> (f64, f64) {
    let (a2, a4) = frobenius_coefficients(p, lambda);
    let r2 = r * r;
    (1.0 + r2 * (a2 + a4 * r2), r * (2.0 * a2 + 4.0 * a4 * r2))
}

/// Sampled solution of the radial eigen-equation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    r_grid: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    lambda: f64,
    model: ModelParams,
}

impl RadialSolution {
    /// Wrap externally produced samples, e.g. to feed [`ode_residual`] a perturbed solution.
    pub fn from_parts(
        model: ModelParams,
        lambda: f64,
        r_grid: Vec<f64>,
        phi: Vec<f64>,
        dphi: Vec<f64>,
    ) -> Result<Self> {
        if r_grid.len() < 2 {
            return Err(Error::GridTooShort {
                len: r_grid.len(),
                min: 2,
            });
        }
        if phi.len() != r_grid.len() || dphi.len() != r_grid.len() {
            return Err(Error::InvalidParams(
                "sample arrays differ in length".into(),
            ));
        }
        if !(r_grid[0] > 0.0) || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneGrid);
        }
        Ok(Self {
            r_grid,
            phi,
            dphi,
            lambda,
            model,
        })
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn dphi(&self) -> &[f64] {
        &self.dphi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().expect("grid is non-empty")
    }

    /// Dense output by cubic Hermite interpolation of `(Φ, Φ')`; the Frobenius
    /// series covers `[0, r_start)`. `None` outside `[0, r_max]`.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        if !(r >= 0.0) || r > self.r_max() {
            return None;
        }
        if r < self.r_grid[0] {
            return Some(frobenius_eval(&self.model, self.lambda, r).0);
        }
        let i = self
            .r_grid
            .partition_point(|&x| x <= r)
            .clamp(1, self.r_grid.len() - 1);
        let (r0, r1) = (self.r_grid[i - 1], self.r_grid[i]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(
            h00 * self.phi[i - 1]
                + h10 * h * self.dphi[i - 1]
                + h01 * self.phi[i]
                + h11 * h * self.dphi[i],
        )
    }

    /// Copy with `Φ` shifted by a constant (negative-control helper).
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.phi.iter_mut().for_each(|v| *v += delta);
        out
    }
}

/// Integrate from the Frobenius start to `r_max` with step `h` (default options).
pub fn solve_eigen_ode(p: &ModelParams, lambda: f64, r_max: f64, h: f64) -> Result<RadialSolution> {
    solve_eigen_ode_with(p, lambda, r_max, h, &SolverOptions::default())
}

pub fn solve_eigen_ode_with(
    p: &ModelParams,
    lambda: f64,
    r_max: f64,
    h: f64,
    opts: &SolverOptions,
) -> Result<RadialSolution> {
    if h > MAX_STEP {
        return Err(Error::StepTooLarge { h });
    }
    if !(h > 0.0) {
        return Err(domain("step must be positive", h));
    }
    if !(opts.grading > 0.0) {
        return Err(domain("grading must be positive", opts.grading));
    }
    let (phi0, dphi0) = frobenius_start(p, lambda, opts.r_start)?;
    if !(r_max > opts.r_start) || !r_max.is_finite() {
        return Err(domain("r_max must exceed the Frobenius offset", r_max));
    }

    let mu = eigenvalue(p, lambda);
    let rhs =
        |r: f64, y: [f64; 2]| -> Result<[f64; 2]> { Ok([y[1], -sigma(p, r)? * y[1] - mu * y[0]]) };
    let grade = opts.grading / p.nm1();
    // do not leave a sliver shorter than this at the end of an interval
    let min_tail = 1e-3 * h;

    let mut nodes = vec![opts.r_start];
    let mut k = (opts.r_start / h).floor() + 1.0;
    while k * h < r_max - min_tail {
        nodes.push(k * h);
        k += 1.0;
    }
    nodes.push(r_max);

    let mut y = [phi0, dphi0];
    let mut phi = Vec::with_capacity(nodes.len());
    let mut dphi = Vec::with_capacity(nodes.len());
    phi.push(y[0]);
    dphi.push(y[1]);
    for w in nodes.windows(2) {
        let (mut r, end) = (w[0], w[1]);
        while r < end {
            let mut step = h.min(grade * r);
            if end - r <= step + min_tail {
                step = end - r;
            }
            let k1 = rhs(r, y)?;
            let k2 = rhs(r + 0.5 * step, axpy(y, 0.5 * step, k1))?;
            let k3 = rhs(r + 0.5 * step, axpy(y, 0.5 * step, k2))?;
            let k4 = rhs(r + step, axpy(y, step, k3))?;
            for j in 0..2 {
                y[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            r = if end - r == step { end } else { r + step };
        }
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    Ok(RadialSolution {
        r_grid: nodes,
        phi,
        dphi,
        lambda,
        model: *p,
    })
}

fn axpy(y: [f64; 2], a: f64, k: [f64; 2]) -> [f64; 2] {
    [y[0] + a * k[0], y[1] + a * k[1]]
}

// Three-point weights for f' and f'' at the middle of a possibly nonuniform stencil.
fn three_point(x: [f64; 3], f: [f64; 3]) -> (f64, f64) {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    let d1 = (h1 * h1 * f[2] - h2 * h2 * f[0] + (h2 * h2 - h1 * h1) * f[1]) / (h1 * h2 * (h1 + h2));
    let d2 = 2.0 * (h1 * f[2] - (h1 + h2) * f[1] + h2 * f[0]) / (h1 * h2 * (h1 + h2));
    (d1, d2)
}

/// `max |Φ'' + σΦ' + (Q²/4 + λ²)Φ|` over interior grid points, `Φ''` by central differences.
pub fn ode_residual(sol: &RadialSolution) -> Result<f64> {
    let len = sol.r_grid.len();
    if len < 5 {
        return Err(Error::GridTooShort { len, min: 5 });
    }
    let mu = eigenvalue(&sol.model, sol.lambda);
    let mut worst: f64 = 0.0;
    for i in 1..len - 1 {
        let x = [sol.r_grid[i - 1], sol.r_grid[i], sol.r_grid[i + 1]];
        let f = [sol.phi[i - 1], sol.phi[i], sol.phi[i + 1]];
        let (_, d2) = three_point(x, f);
        let res = d2 + sigma(&sol.model, x[1])? * sol.dphi[i] + mu * sol.phi[i];
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

fn hypergeometric_operator(hp: &HypergeometricParams, z: f64, f: f64, d1: f64, d2: f64) -> f64 {
    let first = hp.c() - (hp.a() + hp.b() + 1.0) * z;
    let res = z * (1.0 - z) * d2 + first * d1 - hp.a() * hp.b() * f;
    res.norm()
}

/// Maximum residual of the hypergeometric equation
/// `z(1−z)f'' + (c − (a+b+1)z)f' − ab·f` for samples `f` on a strictly monotone,
/// possibly nonuniform, grid. Derivatives use three-point central stencils.
pub fn hypergeometric_residual(hp: &HypergeometricParams, z: &[f64], f: &[f64]) -> Result<f64> {
    let len = z.len();
    if len < 5 {
        return Err(Error::GridTooShort { len, min: 5 });
    }
    if f.len() != len {
        return Err(Error::InvalidParams(
            "sample arrays differ in length".into(),
        ));
    }
    let increasing = z[1] > z[0];
    if z.windows(2)
        .any(|w| (w[1] > w[0]) != increasing || w[1] == w[0])
    {
        return Err(Error::NonMonotoneGrid);
    }
    let mut worst: f64 = 0.0;
    for i in 1..len - 1 {
        let (d1, d2) = three_point([z[i - 1], z[i], z[i + 1]], [f[i - 1], f[i], f[i + 1]]);
        worst = worst.max(hypergeometric_operator(hp, z[i], f[i], d1, d2));
    }
    Ok(worst)
}

/// Hypergeometric residual of a function evaluated directly on five-point
/// fourth-order stencils of half-width `2h` around each of `z`.
pub fn hypergeometric_residual_stencil<F>(
    hp: &HypergeometricParams,
    f: F,
    z: &[f64],
    h: f64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(domain("stencil step must be positive", h));
    }
    let mut worst: f64 = 0.0;
    for &z0 in z {
        let fm2 = f(z0 - 2.0 * h)?;
        let fm1 = f(z0 - h)?;
        let f0 = f(z0)?;
        let fp1 = f(z0 + h)?;
        let fp2 = f(z0 + 2.0 * h)?;
        let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
        let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
        worst = worst.max(hypergeometric_operator(hp, z0, f0, d1, d2));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hypergeometric_parameters, variable_map};
    use crate::special::{gauss_2f1, spherical_function};

    fn h3() -> ModelParams {
        ModelParams::new(3, 2.0, 2.0).unwrap()
    }

    fn h3_closed(lambda: f64, r: f64) -> f64 {
        if lambda == 0.0 {
            r / r.sinh()
        } else {
            (lambda * r).sin() / (lambda * r.sinh())
        }
    }

    fn max_err_on<F: Fn(f64) -> f64>(
        sol: &RadialSolution,
        lo: f64,
        hi: f64,
        step: f64,
        oracle: F,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        let mut r = lo;
        while r <= hi + 1e-12 {
            worst = worst.max((sol.value_at(r).unwrap() - oracle(r)).abs());
            r += step;
        }
        worst
    }

    #[test]
    fn frobenius_leading_coefficient() {
        let p = ModelParams::new(5, 1.3, 2.2).unwrap();
        let (a2, _) = frobenius_coefficients(&p, 0.0);
        assert!((a2 + 2.2 * 2.2 / 40.0).abs() < 1e-15);
        let (phi, dphi) = frobenius_start(&p, 0.8, 1e-3).unwrap();
        assert!(phi < 1.0 && dphi < 0.0);
        assert!(frobenius_start(&p, 0.8, 0.0).is_err());
        assert!(frobenius_start(&p, 0.8, 0.02).is_err());
    }

    #[test]
    fn frobenius_matches_h3_closed_form() {
        for &lambda in &[0.0, 1.0, 3.0] {
            let r = 1e-3;
            let (phi, _) = frobenius_start(&h3(), lambda, r).unwrap();
            assert!((phi - h3_closed(lambda, r)).abs() <= 1e-12);
            let r = 1e-2;
            let (phi, _) = frobenius_start(&h3(), lambda, r).unwrap();
            assert!((phi - h3_closed(lambda, r)).abs() <= 1e-10);
        }
    }

    #[test]
    fn solver_matches_h3_closed_form() {
        let sol = solve_eigen_ode(&h3(), 1.0, 5.0, 1e-3).unwrap();
        let err = max_err_on(&sol, 0.01, 5.0, 0.01, |r| h3_closed(1.0, r));
        assert!(err <= 1e-8, "{err}");
        assert_eq!(sol.r_max(), 5.0);
    }

    #[test]
    fn solver_matches_hypergeometric_kernel() {
        let p = ModelParams::new(4, 1.0, 2.0).unwrap();
        let sol = solve_eigen_ode(&p, 0.5, 5.0, 1e-3).unwrap();
        let err = max_err_on(&sol, 0.01, 5.0, 0.05, |r| {
            spherical_function(&p, 0.5, r, 1e-13).unwrap()
        });
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn solver_is_fourth_order() {
        let err = |h: f64| {
            let sol = solve_eigen_ode(&h3(), 1.0, 5.0, h).unwrap();
            max_err_on(&sol, 1.0, 5.0, 0.05, |r| h3_closed(1.0, r))
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        assert!(e1 / e2 >= 8.0, "{e1} / {e2}");
    }

    #[test]
    fn solver_depends_on_lambda_squared() {
        let p = ModelParams::new(7, 1.0, 4.0).unwrap();
        let a = solve_eigen_ode(&p, 1.7, 3.0, 2e-3).unwrap();
        let b = solve_eigen_ode(&p, -1.7, 3.0, 2e-3).unwrap();
        assert_eq!(a.phi(), b.phi());
        assert_eq!(a.dphi(), b.dphi());
    }

    #[test]
    fn solver_rejects_bad_inputs() {
        assert!(matches!(
            solve_eigen_ode(&h3(), 1.0, 5.0, 0.02),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(solve_eigen_ode(&h3(), 1.0, -1.0, 1e-3).is_err());
        assert!(solve_eigen_ode(&h3(), 1.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn residual_of_solution_and_controls() {
        let p = ModelParams::new(4, 1.0, 2.0).unwrap();
        let lambda = 0.5;
        let sol = solve_eigen_ode(&p, lambda, 5.0, 1e-3).unwrap();
        assert!(ode_residual(&sol).unwrap() <= 1e-6);
        let mu = eigenvalue(&p, lambda);
        assert!(ode_residual(&sol.shifted(0.01)).unwrap() >= 0.009 * mu);
        let zero = RadialSolution::from_parts(
            p,
            lambda,
            sol.r_grid().to_vec(),
            vec![0.0; sol.r_grid().len()],
            vec![0.0; sol.r_grid().len()],
        )
        .unwrap();
        assert_eq!(ode_residual(&zero).unwrap(), 0.0);
        let short =
            RadialSolution::from_parts(p, lambda, vec![0.1, 0.2, 0.3], vec![1.0; 3], vec![0.0; 3])
                .unwrap();
        assert!(matches!(
            ode_residual(&short),
            Err(Error::GridTooShort { .. })
        ));
    }

    #[test]
    fn hypergeometric_residual_of_kernel_samples() {
        let p = ModelParams::new(7, 1.0, 4.0).unwrap();
        let hp = hypergeometric_parameters(&p, 2.0);
        let z: Vec<f64> = (0..=10_000).map(|i| -2.0 + 2e-4 * f64::from(i)).collect();
        let f: Vec<f64> = z
            .iter()
            .map(|&z| gauss_2f1(&hp, z, 1e-14).unwrap().value.re)
            .collect();
        let res = hypergeometric_residual(&hp, &z, &f).unwrap();
        assert!(res <= 1e-6, "{res}");
    }

    #[test]
    fn hypergeometric_residual_of_constant() {
        let hp = crate::special::HypergeometricParams::real(1.5, 2.0, 2.0).unwrap();
        let z: Vec<f64> = (0..10).map(|i| -f64::from(i) * 0.1).collect();
        let f = vec![2.0; 10];
        let res = hypergeometric_residual(&hp, &z, &f).unwrap();
        assert!((res - 1.5 * 2.0 * 2.0).abs() < 1e-12);
        assert!(hypergeometric_residual(&hp, &z[..4], &f[..4]).is_err());
        let mut bad = z.clone();
        bad[3] = bad[2];
        assert!(matches!(
            hypergeometric_residual(&hp, &bad, &f),
            Err(Error::NonMonotoneGrid)
        ));
    }

    #[test]
    fn radial_solution_satisfies_hypergeometric_equation_in_z() {
        let p = ModelParams::new(4, 1.0, 2.0).unwrap();
        let lambda = 0.5;
        let sol = solve_eigen_ode(&p, lambda, 3.0, 1e-3).unwrap();
        let z: Vec<f64> = (0..=500)
            .map(|i| -1.0 + 0.002 * f64::from(i) - 0.01)
            .collect();
        let f: Vec<f64> = z
            .iter()
            .map(|&z| {
                sol.value_at(crate::model::inverse_variable_map(&p, z).unwrap())
                    .unwrap()
            })
            .collect();
        let hp = hypergeometric_parameters(&p, lambda);
        let res = hypergeometric_residual(&hp, &z, &f).unwrap();
        assert!(res <= 1e-5, "{res}");
        // sanity: the grid maps into the solved range
        assert!(variable_map(&p, 3.0).unwrap() < -1.01);
    }
}
