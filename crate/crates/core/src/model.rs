//! Closed-form geometry of a harmonic manifold of hypergeometric type.
//!
//! Everything here is a pure function of [`ModelParams`]. `ℓ` and `Q` carry the
//! dimension of inverse length, so a metric rescaling `g ↦ c²g` divides both by
//! `c` and the Einstein constant by `c²`.

use std::f64::consts::SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::HypergeometricParams;

/// Default tolerance for bound classification.
pub const DEFAULT_BOUND_TOL: f64 = 1e-9;

/// The triple `(n, ℓ, Q)` defining a hypergeometric-type harmonic manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n: u32,
    ell: f64,
    q: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: u32,
    ell: f64,
    q: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.n, raw.ell, raw.q)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            n: p.n,
            ell: p.ell,
            q: p.q,
        }
    }
}

impl ModelParams {
    pub fn new(n: u32, ell: f64, q: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!(
                "dimension n = {n} must be at least 3"
            )));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidParams(format!(
                "scale ell = {ell} must be positive"
            )));
        }
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParams(format!(
                "entropy q = {q} must be positive"
            )));
        }
        Ok(Self { n, ell, q })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `n − 1` as a float.
    pub fn nm1(&self) -> f64 {
        f64::from(self.n - 1)
    }

    /// Exponent of `cosh(ℓr/2)` in the density, `2Q/ℓ − (n−1)`.
    pub fn cosh_exponent(&self) -> f64 {
        2.0 * self.q / self.ell - self.nm1()
    }

    /// The equivalent [`GeneralizedDensity`] `(k, c₁, c₂, ℓ)`.
    pub fn generalized_density(&self) -> GeneralizedDensity {
        GeneralizedDensity {
            coeff: (2.0 / self.ell).powi(self.n as i32 - 1),
            c1: self.nm1(),
            c2: self.cosh_exponent(),
            ell: self.ell,
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n, self.ell, self.q)
    }
}

/// Einstein constant `κ` with `Ric = κ·g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinConstant {
    pub kappa: f64,
}

impl EinsteinConstant {
    /// Scalar curvature `s = n·κ`.
    pub fn scalar_curvature(&self, n: u32) -> f64 {
        f64::from(n) * self.kappa
    }
}

/// Metric rescaling factor `c` in `g ↦ c²g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(domain("scale factor must be positive", c));
        }
        Ok(Self(c))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// Density `Θ(r) = k·sinh^{c₁}(ℓr/2)·cosh^{c₂}(ℓr/2)`, equivalently mean curvature
/// `σ(r) = (ℓ/2)(c₁ coth(ℓr/2) + c₂ tanh(ℓr/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedDensity {
    pub coeff: f64,
    pub c1: f64,
    pub c2: f64,
    pub ell: f64,
}

impl GeneralizedDensity {
    pub fn new(coeff: f64, c1: f64, c2: f64, ell: f64) -> Result<Self> {
        if !(coeff > 0.0 && c1 > 0.0 && ell > 0.0 && c1 + c2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "generalized density needs k > 0, c1 > 0, c1 + c2 > 0, ell > 0 (got k = {coeff}, c1 = {c1}, c2 = {c2}, ell = {ell})"
            )));
        }
        Ok(Self { coeff, c1, c2, ell })
    }

    pub fn theta(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(domain("density radius must be non-negative", r));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let x = 0.5 * self.ell * r;
        Ok(self.coeff * pow(x.sinh(), self.c1) * pow(x.cosh(), self.c2))
    }

    pub fn sigma(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain("mean curvature radius must be positive", r));
        }
        let x = 0.5 * self.ell * r;
        Ok(0.5 * self.ell * (self.c1 / x.tanh() + self.c2 * x.tanh()))
    }
}

// Integer exponents go through powi so that, e.g., the ℓ = 2 density reproduces
// sinh^{n−1} bit-for-bit.
fn pow(base: f64, exp: f64) -> f64 {
    if exp == exp.trunc() && exp.abs() < 1024.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// Volume density of the geodesic sphere of radius `r`.
pub fn theta(p: &ModelParams, r: f64) -> Result<f64> {
    p.generalized_density().theta(r)
}

/// `log Θ(r)`, finite for radii where `Θ` itself overflows.
pub fn log_theta(p: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("log-density radius must be positive", r));
    }
    let x = 0.5 * p.ell * r;
    Ok(p.nm1() * (2.0 / p.ell).ln() + p.nm1() * ln_sinh(x) + p.cosh_exponent() * ln_cosh(x))
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn ln_cosh(x: f64) -> f64 {
    x - std::f64::consts::LN_2 + (-2.0 * x).exp().ln_1p()
}

/// Mean curvature of the geodesic sphere of radius `r`, `σ = Θ'/Θ`.
pub fn sigma(p: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("mean curvature radius must be positive", r));
    }
    let x = 0.5 * p.ell * r;
    let half = 0.5 * p.ell * p.nm1();
    Ok(half / x.tanh() + (p.q - half) * x.tanh())
}

/// Coefficient `s₁` in the Laurent expansion `σ(r) = (n−1)/r + s₁·r + O(r³)`.
pub fn sigma_linear_coefficient(p: &ModelParams) -> f64 {
    0.5 * p.q * p.ell - p.ell * p.ell * p.nm1() / 6.0
}

/// `κ = −(ℓ/2)(3Q − (n−1)ℓ)`, fixed by Ledger's formula
/// `(Θ/r^{n−1})''(0) = −κ/3` applied to the series of `Θ` at the origin.
pub fn einstein_constant(p: &ModelParams) -> EinsteinConstant {
    EinsteinConstant {
        kappa: -0.5 * p.ell * (3.0 * p.q - p.nm1() * p.ell),
    }
}

/// Parameters of `c²g`: `(n, ℓ/c, Q/c)`.
pub fn rescale(p: &ModelParams, c: ScaleFactor) -> ModelParams {
    ModelParams {
        n: p.n,
        ell: p.ell / c.0,
        q: p.q / c.0,
    }
}

/// Rescale so that `Ric = −(n−1)`; returns the normalized model and `c = √(−κ/(n−1))`.
pub fn normalize_ricci(p: &ModelParams) -> Result<(ModelParams, ScaleFactor)> {
    let kappa = einstein_constant(p).kappa;
    if kappa >= 0.0 {
        return Err(Error::NonNegativeRicci { kappa });
    }
    let c = ScaleFactor((-kappa / p.nm1()).sqrt());
    Ok((rescale(p, c), c))
}

/// Volume entropy of the `Ric = −(n−1)` model with scale `ℓ`: `(ℓ + 2/ℓ)(n−1)/3`.
pub fn entropy_of_normalized(ell: f64, n: u32) -> Result<f64> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(domain("scale ell must be positive", ell));
    }
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "dimension n = {n} must be at least 3"
        )));
    }
    Ok((ell + 2.0 / ell) * f64::from(n - 1) / 3.0)
}

/// The normalized model with scale `ℓ`.
pub fn normalized_model(ell: f64, n: u32) -> Result<ModelParams> {
    ModelParams::new(n, ell, entropy_of_normalized(ell, n)?)
}

/// `2√2(n−1)/3`.
pub fn entropy_lower_bound(n: u32) -> f64 {
    2.0 * SQRT_2 * f64::from(n - 1) / 3.0
}

/// `n − 1`.
pub fn entropy_upper_bound(n: u32) -> f64 {
    f64::from(n - 1)
}

/// Equality case at the upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rigidity {
    RealHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundTag {
    BelowLower,
    AtLower,
    Interior,
    AtUpper(Rigidity),
    AboveUpper,
}

impl fmt::Display for BoundTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundTag::BelowLower => f.write_str("BelowLower"),
            BoundTag::AtLower => f.write_str("AtLower"),
            BoundTag::Interior => f.write_str("Interior"),
            BoundTag::AtUpper(Rigidity::RealHyperbolic) => f.write_str("AtUpper(RealHyperbolic)"),
            BoundTag::AboveUpper => f.write_str("AboveUpper"),
        }
    }
}

/// Position of a normalized entropy relative to `[2√2(n−1)/3, n−1]`.
///
/// `margin_low = Q − lower`, `margin_high = upper − Q`; both are non-negative
/// for an entropy inside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundClassification {
    pub tag: BoundTag,
    pub margin_low: f64,
    pub margin_high: f64,
}

/// Classify a Ricci-normalized model against the entropy bounds.
pub fn classify_bounds(p: &ModelParams, tol: f64) -> Result<BoundClassification> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive", tol));
    }
    let kappa = einstein_constant(p).kappa;
    let expected = -p.nm1();
    if (kappa - expected).abs() > tol {
        return Err(Error::NotNormalized { kappa, expected });
    }
    Ok(classify_entropy(p.q, p.n, tol))
}

pub(crate) fn classify_entropy(q: f64, n: u32, tol: f64) -> BoundClassification {
    let margin_low = q - entropy_lower_bound(n);
    let margin_high = entropy_upper_bound(n) - q;
    let tag = if margin_low < -tol {
        BoundTag::BelowLower
    } else if margin_low <= tol {
        BoundTag::AtLower
    } else if margin_high < -tol {
        BoundTag::AboveUpper
    } else if margin_high <= tol {
        BoundTag::AtUpper(Rigidity::RealHyperbolic)
    } else {
        BoundTag::Interior
    };
    BoundClassification {
        tag,
        margin_low,
        margin_high,
    }
}

/// `a = (Q/2 + iλ)/ℓ`, `b = (Q/2 − iλ)/ℓ`, `c = n/2`.
pub fn hypergeometric_parameters(p: &ModelParams, lambda: f64) -> HypergeometricParams {
    let a = Complex64::new(0.5 * p.q / p.ell, lambda / p.ell);
    HypergeometricParams::new(a, a.conj(), 0.5 * f64::from(p.n))
        .expect("c = n/2 >= 3/2 is always admissible")
}

/// `z(r) = −sinh²(ℓr/2)`.
pub fn variable_map(p: &ModelParams, r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(domain("radius must be non-negative", r));
    }
    let s = (0.5 * p.ell * r).sinh();
    Ok(-s * s)
}

/// Inverse of [`variable_map`]: `r(z) = (2/ℓ)·asinh(√(−z))`.
pub fn inverse_variable_map(p: &ModelParams, z: f64) -> Result<f64> {
    if z > 0.0 || z.is_nan() {
        return Err(domain("z must be non-positive", z));
    }
    Ok(2.0 / p.ell * (-z).sqrt().asinh())
}
