//! Damek–Ricci spaces built from generalized Heisenberg data `(k, m)`.
//!
//! `k = dim 𝔳` must be a multiple of the dimension `d_m` of an irreducible module
//! over the Clifford algebra of the `m`-dimensional centre `𝔷`. At `ℓ = 1` the
//! space has `n = k + m + 1`, `Q = m + k/2` and `Ric = −(m + k/4)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    classify_entropy, einstein_constant, normalize_ricci, BoundClassification, ModelParams,
};

/// Irreducible Clifford module dimensions `d₁..d₈`; `d_{m+8} = 16·d_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CliffordDimTable {
    base: [u64; 8],
}

pub const CLIFFORD_BASE: [u64; 8] = [2, 4, 4, 8, 8, 8, 8, 16];

impl CliffordDimTable {
    /// The standard table. Panics if its growth invariant fails: `d_m > 2m` for
    /// `m ∈ 9..=16`, which by `d_{m+8} = 16·d_m` extends to every `m ≥ 9`.
    pub fn standard() -> Self {
        let table = Self {
            base: CLIFFORD_BASE,
        };
        assert!(table.base.windows(2).all(|w| w[0] <= w[1]));
        assert!(table.base.iter().all(|d| d.is_power_of_two()));
        for m in 9..=16u32 {
            let d = table.dim(m).expect("small m fits in u64");
            assert!(d > 2 * u64::from(m), "d_{m} = {d} does not exceed 2m");
        }
        table
    }

    /// `d_m`, or `None` once it overflows `u64`.
    pub fn dim(&self, m: u32) -> Option<u64> {
        assert!(m >= 1, "centre dimension m must be positive");
        let period = (m - 1) / 8;
        let base = self.base[((m - 1) % 8) as usize];
        16u64.checked_pow(period)?.checked_mul(base)
    }
}

/// `d_m`. Panics for `m = 0` and when `d_m` exceeds `u64` (`m > 120`).
pub fn irreducible_module_dim(m: u32) -> u64 {
    CliffordDimTable::standard()
        .dim(m)
        .unwrap_or_else(|| panic!("d_{m} overflows u64"))
}

/// `true` iff `d_m` divides `k`.
pub fn is_admissible(k: u64, m: u32) -> bool {
    if k == 0 || m == 0 {
        return false;
    }
    match CliffordDimTable::standard().dim(m) {
        Some(d) => k.is_multiple_of(d),
        None => false,
    }
}

/// A Damek–Ricci space with its hypergeometric-type parameters at `ℓ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamekRicciSpace {
    pub k: u64,
    pub m: u32,
    pub n: u32,
    pub model: ModelParams,
}

impl DamekRicciSpace {
    /// `−(m + k/4)`.
    pub fn ricci_constant(&self) -> f64 {
        -(f64::from(self.m) + self.k as f64 / 4.0)
    }

    /// `Θ(r) = 2^{k+m} sinh^{k+m}(r/2) cosh^m(r/2)`.
    pub fn density(&self, r: f64) -> f64 {
        let km = (self.k + u64::from(self.m)) as i32;
        2f64.powi(km) * (0.5 * r).sinh().powi(km) * (0.5 * r).cosh().powi(self.m as i32)
    }
}

pub fn dr_space(k: u64, m: u32) -> Result<DamekRicciSpace> {
    if !is_admissible(k, m) {
        return Err(Error::NotAdmissible { k, m });
    }
    let n = u32::try_from(k + u64::from(m) + 1)
        .map_err(|_| Error::InvalidParams(format!("dimension k + m + 1 overflows for k = {k}")))?;
    let model = ModelParams::new(n, 1.0, f64::from(m) + k as f64 / 2.0)?;
    Ok(DamekRicciSpace { k, m, n, model })
}

/// Entropy after normalizing to `Ric = −(n−1)`: `(m + k/2)·√((k+m)/(k/4+m))`.
pub fn dr_normalized_entropy(k: u64, m: u32) -> Result<f64> {
    if !is_admissible(k, m) {
        return Err(Error::NotAdmissible { k, m });
    }
    let (k, m) = (k as f64, f64::from(m));
    Ok((m + k / 2.0) * ((k + m) / (k / 4.0 + m)).sqrt())
}

/// All `(m, k = 2m)` with `m ≤ max_m` and `k` admissible: the Damek–Ricci spaces at
/// the lower entropy bound. Requires `max_m ≥ 8` so the answer is complete.
pub fn enumerate_lower_bound(max_m: u32) -> Result<Vec<(u32, u64)>> {
    if max_m < 8 {
        return Err(Error::InvalidParams(format!(
            "max_m = {max_m} < 8 would truncate the lower-bound classification"
        )));
    }
    let table = CliffordDimTable::standard();
    let mut out = Vec::new();
    for m in 1..=max_m {
        let k = 2 * u64::from(m);
        match table.dim(m) {
            Some(d) if k % d == 0 => out.push((m, k)),
            _ => {}
        }
    }
    Ok(out)
}

/// An enumerated space with its normalized entropy and bound classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedSpace {
    pub space: DamekRicciSpace,
    pub normalized_entropy: f64,
    pub classification: BoundClassification,
}

/// The space `(k, m)` with its normalized entropy classified at tolerance `tol`.
pub fn describe_space(k: u64, m: u32, tol: f64) -> Result<EnumeratedSpace> {
    let space = dr_space(k, m)?;
    let normalized_entropy = dr_normalized_entropy(k, m)?;
    Ok(EnumeratedSpace {
        space,
        normalized_entropy,
        classification: classify_entropy(normalized_entropy, space.n, tol),
    })
}

/// Admissible `(k = j·d_m, m)` for `m ≤ max_m`, `j ≤ max_j`, ordered by `(m, j)`.
pub fn enumerate_spaces(max_m: u32, max_j: u64, tol: f64) -> Result<Vec<EnumeratedSpace>> {
    if max_m == 0 || max_j == 0 {
        return Err(Error::InvalidParams(
            "max_m and max_j must be positive".into(),
        ));
    }
    let table = CliffordDimTable::standard();
    let mut out = Vec::new();
    for m in 1..=max_m {
        let d = table
            .dim(m)
            .ok_or_else(|| Error::InvalidParams(format!("d_{m} overflows u64")))?;
        for j in 1..=max_j {
            let k = d
                .checked_mul(j)
                .ok_or_else(|| Error::InvalidParams(format!("k = {j}·{d} overflows u64")))?;
            out.push(describe_space(k, m, tol)?);
        }
    }
    Ok(out)
}

/// `c²` from [`normalize_ricci`] alongside the closed form `(k/4 + m)/(k + m)`.
pub fn normalization_factor_squared(space: &DamekRicciSpace) -> Result<(f64, f64)> {
    let (_, c) = normalize_ricci(&space.model)?;
    let (k, m) = (space.k as f64, f64::from(space.m));
    Ok((c.get() * c.get(), (k / 4.0 + m) / (k + m)))
}

/// `κ` at `ℓ = 1` from the general formula, for comparison with [`DamekRicciSpace::ricci_constant`].
pub fn einstein_constant_of(space: &DamekRicciSpace) -> f64 {
    einstein_constant(&space.model).kappa
}
