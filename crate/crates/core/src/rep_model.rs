//! Irreducible unitary models of SL(2,R) in the weight basis.
//!
//! Every non-trivial irreducible model is realised on a Hilbert space with an
//! orthogonal basis `{u_k}` of eigenvectors of `Θ = U - V` (`Θ u_k = i k u_k`).
//! A model is fixed by its series, the representation parameter `ν` (Casimir
//! `μ = 1 - ν²`) and, for the principal series, the parity `δ` selecting the
//! spherical (even weights) or non-spherical (odd weights) model.
//!
//! Vectors are finitely supported coefficient maps `k ↦ f_k` over the index set
//! of the model; norms of basis vectors follow the step-2 product recursion and
//! are carried in log form so that long ladders neither overflow nor underflow.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default spectral-gap bound used when a file or config does not carry one.
pub const DEFAULT_GAP: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    Principal,
    Complementary,
    DiscreteHolomorphic,
    DiscreteAntiholomorphic,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Principal => "principal",
            Series::Complementary => "complementary",
            Series::DiscreteHolomorphic => "holomorphic",
            Series::DiscreteAntiholomorphic => "antiholomorphic",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            Series::DiscreteHolomorphic | Series::DiscreteAntiholomorphic
        )
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "principal" => Ok(Series::Principal),
            "complementary" => Ok(Series::Complementary),
            "holomorphic" | "discrete-holomorphic" | "discrete_holomorphic" => {
                Ok(Series::DiscreteHolomorphic)
            }
            "antiholomorphic" | "discrete-antiholomorphic" | "discrete_antiholomorphic" => {
                Ok(Series::DiscreteAntiholomorphic)
            }
            other => Err(Error::InvalidParams(format!("unknown series '{other}'"))),
        }
    }
}

/// Model selector: spherical/non-spherical for the principal series,
/// upper/lower half-plane for the discrete series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Delta {
    Plus,
    Minus,
}

impl Delta {
    pub fn as_str(self) -> &'static str {
        match self {
            Delta::Plus => "+",
            Delta::Minus => "-",
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Delta::Plus),
            "-" | "minus" => Ok(Delta::Minus),
            other => Err(Error::InvalidParams(format!("unknown parity '{other}'"))),
        }
    }
}

/// One validated irreducible model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepParams {
    series: Series,
    nu: C64,
    delta: Delta,
    gap: f64,
    mu: f64,
}

/// Validates and builds a model. See [`RepParams::new`].
pub fn make_params(series: Series, nu: C64, delta: Delta, gap: f64) -> Result<RepParams> {
    RepParams::new(series, nu, delta, gap)
}

impl RepParams {
    pub fn new(series: Series, nu: C64, delta: Delta, gap: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !nu.re.is_finite() || !nu.im.is_finite() {
            return bad(format!("nu must be finite, got {nu}"));
        }
        if !(gap > 0.0 && gap < 1.0) {
            return bad(format!("spectral gap must lie in (0, 1), got {gap}"));
        }
        match series {
            Series::Principal => {
                if nu.re != 0.0 {
                    return bad(format!("principal series needs Re(nu) = 0, got {nu}"));
                }
            }
            Series::Complementary => {
                if nu.im != 0.0 {
                    return bad(format!("complementary series needs real nu, got {nu}"));
                }
                if nu.re == 0.0 || nu.re.abs() >= gap {
                    return bad(format!(
                        "complementary nu must lie in (-{gap}, {gap}) \\ {{0}}, got {}",
                        nu.re
                    ));
                }
                if delta == Delta::Minus {
                    return bad("complementary series has no non-spherical model".into());
                }
            }
            Series::DiscreteHolomorphic | Series::DiscreteAntiholomorphic => {
                if nu.im != 0.0 || nu.re.fract() != 0.0 {
                    return bad(format!("discrete series needs an integer nu, got {nu}"));
                }
                let holo = series == Series::DiscreteHolomorphic;
                if holo && nu.re < 1.0 {
                    return bad(format!(
                        "holomorphic discrete series needs nu >= 1, got {}",
                        nu.re
                    ));
                }
                if !holo && nu.re > -1.0 {
                    return bad(format!(
                        "antiholomorphic discrete series needs nu <= -1, got {}",
                        nu.re
                    ));
                }
                let expected = if holo { Delta::Plus } else { Delta::Minus };
                if delta != expected {
                    return bad(format!(
                        "{series} series is the '{expected}' model, got delta '{delta}'"
                    ));
                }
            }
        }
        let mu = (C64::new(1.0, 0.0) - nu * nu).re;
        Ok(RepParams {
            series,
            nu,
            delta,
            gap,
            mu,
        })
    }

    pub fn series(&self) -> Series {
        self.series
    }

    pub fn nu(&self) -> C64 {
        self.nu
    }

    pub fn delta(&self) -> Delta {
        self.delta
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Casimir parameter `μ = 1 - ν²`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The parameter entering the ladder coefficients `(k ± 1 ± ν)/2`.
    ///
    /// The antiholomorphic model is the mirror image `k ↦ -k` of the
    /// holomorphic one with the same Casimir value, so its ladder uses `|ν|`.
    pub fn operator_nu(&self) -> C64 {
        match self.series {
            Series::DiscreteAntiholomorphic => -self.nu,
            _ => self.nu,
        }
    }

    /// `ν` as an integer when the ladder coefficients are rational.
    pub fn integer_nu(&self) -> Option<i64> {
        let nu = self.operator_nu();
        (nu.im == 0.0 && nu.re.fract() == 0.0).then_some(nu.re as i64)
    }

    fn discrete_weight(&self) -> i64 {
        self.operator_nu().re as i64 + 1
    }

    pub fn index_set(&self) -> IndexSet {
        match self.series {
            Series::Principal => IndexSet {
                parity: if self.delta == Delta::Plus { 0 } else { 1 },
                lower: None,
                upper: None,
            },
            Series::Complementary => IndexSet {
                parity: 0,
                lower: None,
                upper: None,
            },
            Series::DiscreteHolomorphic => {
                let w = self.discrete_weight();
                IndexSet {
                    parity: w.rem_euclid(2),
                    lower: Some(w),
                    upper: None,
                }
            }
            Series::DiscreteAntiholomorphic => {
                let w = self.discrete_weight();
                IndexSet {
                    parity: w.rem_euclid(2),
                    lower: None,
                    upper: Some(-w),
                }
            }
        }
    }

    pub fn obstruction_set(&self) -> ObstructionIndexSet {
        let idx = match (self.series, self.delta) {
            (Series::Principal, Delta::Plus) | (Series::Complementary, _) => vec![0, 2],
            (Series::Principal, Delta::Minus) => vec![-1, 1],
            (Series::DiscreteHolomorphic, _) => vec![self.discrete_weight()],
            (Series::DiscreteAntiholomorphic, _) => vec![-self.discrete_weight()],
        };
        ObstructionIndexSet(idx)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.index_set().contains(k)
    }

    /// `|k₀|` of the basis vector normalised to `‖u_{k₀}‖ = 1`.
    pub fn base_abs_index(&self) -> i64 {
        match (self.series, self.delta) {
            (Series::Principal, Delta::Minus) => 1,
            (Series::Principal, Delta::Plus) | (Series::Complementary, _) => 0,
            _ => self.discrete_weight(),
        }
    }

    /// Whether all basis vectors have the same norm (`ν ∈ iℝ`).
    pub fn has_flat_norms(&self) -> bool {
        self.operator_nu().re == 0.0
    }

    /// Short label carrying the full parameter tuple.
    pub fn label(&self) -> String {
        format!(
            "{}:{}{:+}i:{}",
            self.series, self.nu.re, self.nu.im, self.delta
        )
    }
}

/// The weights `I_ν` of a model: one parity class, possibly bounded on one side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexSet {
    parity: i64,
    lower: Option<i64>,
    upper: Option<i64>,
}

impl IndexSet {
    pub fn contains(&self, k: i64) -> bool {
        k.rem_euclid(2) == self.parity
            && self.lower.is_none_or(|l| k >= l)
            && self.upper.is_none_or(|u| k <= u)
    }

    pub fn parity(&self) -> i64 {
        self.parity
    }

    /// Lowest (holomorphic) or highest (antiholomorphic) weight.
    pub fn boundary_weight(&self) -> Option<i64> {
        self.lower.or(self.upper)
    }

    pub fn lower(&self) -> Option<i64> {
        self.lower
    }

    pub fn upper(&self) -> Option<i64> {
        self.upper
    }

    /// All weights with `|k| <= radius`, ascending.
    pub fn enumerate(&self, radius: i64) -> Vec<i64> {
        let mut lo = self.lower.map_or(-radius, |l| l.max(-radius));
        let hi = self.upper.map_or(radius, |u| u.min(radius));
        if lo.rem_euclid(2) != self.parity {
            lo += 1;
        }
        (lo..=hi).step_by(2).collect()
    }
}

/// The finite set `S` of obstruction indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObstructionIndexSet(Vec<i64>);

impl ObstructionIndexSet {
    pub fn contains(&self, k: i64) -> bool {
        self.0.contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A non-negative, finite Sobolev exponent.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SobolevOrder(f64);

impl SobolevOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s >= 0.0 {
            Ok(SobolevOrder(s))
        } else {
            Err(Error::InvalidParams(format!(
                "Sobolev order must be finite and non-negative, got {s}"
            )))
        }
    }

    pub const ZERO: SobolevOrder = SobolevOrder(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// `self + shift`, for shifts that keep the order non-negative.
    pub(crate) fn shifted(self, shift: f64) -> SobolevOrder {
        debug_assert!(self.0 + shift >= 0.0);
        SobolevOrder(self.0 + shift)
    }
}

fn log_ratio(nu: f64, j: i64) -> f64 {
    let j = j as f64;
    ((j - 1.0 - nu) / (j - 1.0 + nu)).ln()
}

/// `log ‖u_k‖²` by the step-2 product recursion from the base index.
pub fn log_basis_norm_sq(params: &RepParams, k: i64) -> Result<f64> {
    if !params.contains(k) {
        return Err(Error::IndexOutsideModel { k });
    }
    if params.has_flat_norms() {
        return Ok(0.0);
    }
    let nu = params.operator_nu().re;
    let base = params.base_abs_index();
    Ok((base + 2..=k.abs())
        .step_by(2)
        .map(|j| log_ratio(nu, j))
        .sum())
}

/// `‖u_k‖²`.
pub fn basis_norm_sq(params: &RepParams, k: i64) -> Result<f64> {
    log_basis_norm_sq(params, k).map(f64::exp)
}

/// Cached `log ‖u_k‖²` for `|k|` up to a radius, extended on demand.
#[derive(Clone, Debug)]
pub struct NormTable {
    flat: bool,
    nu: f64,
    base: i64,
    // log norms at |k| = base, base + 2, ...
    logs: Vec<f64>,
}

impl NormTable {
    pub fn new(params: &RepParams, radius: i64) -> Self {
        let flat = params.has_flat_norms();
        let base = params.base_abs_index();
        let mut table = NormTable {
            flat,
            nu: params.operator_nu().re,
            base,
            logs: vec![0.0],
        };
        if !flat {
            table.extend_to(radius);
        }
        table
    }

    fn extend_to(&mut self, abs_k: i64) {
        while self.base + 2 * (self.logs.len() as i64 - 1) < abs_k {
            let j = self.base + 2 * self.logs.len() as i64;
            let last = *self.logs.last().unwrap();
            self.logs.push(last + log_ratio(self.nu, j));
        }
    }

    /// `log ‖u_k‖²`; `k` must be a weight of the model.
    pub fn log_norm_sq(&self, k: i64) -> f64 {
        if self.flat {
            return 0.0;
        }
        let a = k.abs();
        debug_assert!(a >= self.base && (a - self.base) % 2 == 0);
        let i = ((a - self.base) / 2) as usize;
        match self.logs.get(i) {
            Some(v) => *v,
            None => {
                let mut t = self.clone();
                t.extend_to(a);
                t.logs[i]
            }
        }
    }

    pub fn norm(&self, k: i64) -> f64 {
        (0.5 * self.log_norm_sq(k)).exp()
    }

    /// `‖u_k‖ / ‖u_n‖`.
    pub fn norm_ratio(&self, k: i64, n: i64) -> f64 {
        (0.5 * (self.log_norm_sq(k) - self.log_norm_sq(n))).exp()
    }
}

/// A finitely supported vector `Σ f_k u_k` of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector {
    params: RepParams,
    entries: BTreeMap<i64, C64>,
}

impl CoeffVector {
    pub fn zero(params: RepParams) -> Self {
        CoeffVector {
            params,
            entries: BTreeMap::new(),
        }
    }

    /// The basis vector `u_k`.
    pub fn basis(params: RepParams, k: i64) -> Result<Self> {
        let mut v = Self::zero(params);
        v.set(k, C64::new(1.0, 0.0))?;
        Ok(v)
    }

    pub fn from_entries<I>(params: RepParams, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let mut v = Self::zero(params);
        for (k, c) in entries {
            v.add_at(k, c)?;
        }
        Ok(v)
    }

    /// Builds a vector from a map whose keys are already known to lie in `I_ν`.
    pub(crate) fn from_map_unchecked(params: RepParams, entries: BTreeMap<i64, C64>) -> Self {
        debug_assert!(entries.keys().all(|k| params.contains(*k)));
        CoeffVector { params, entries }
    }

    pub fn params(&self) -> &RepParams {
        &self.params
    }

    pub fn get(&self, k: i64) -> C64 {
        self.entries.get(&k).copied().unwrap_or_default()
    }

    pub fn set(&mut self, k: i64, c: C64) -> Result<()> {
        if !self.params.contains(k) {
            return Err(Error::IndexOutsideModel { k });
        }
        self.entries.insert(k, c);
        Ok(())
    }

    pub fn add_at(&mut self, k: i64, c: C64) -> Result<()> {
        if !self.params.contains(k) {
            return Err(Error::IndexOutsideModel { k });
        }
        *self.entries.entry(k).or_default() += c;
        Ok(())
    }

    /// Stored entries in ascending index order (may include explicit zeros).
    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.entries.iter().map(|(k, c)| (*k, *c))
    }

    /// Indices carrying a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries
            .iter()
            .filter(|(_, c)| **c != C64::default())
            .map(|(k, _)| *k)
    }

    pub fn is_zero(&self) -> bool {
        self.support().next().is_none()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|k|` with a nonzero coefficient, 0 for the zero vector.
    pub fn radius(&self) -> i64 {
        self.support().map(i64::abs).max().unwrap_or(0)
    }

    /// Drops entries with `|f_k| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        self.entries.retain(|_, c| c.norm() > tol);
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &CoeffVector) -> Result<()> {
        if self.params == other.params {
            Ok(())
        } else {
            Err(Error::ParamsMismatch)
        }
    }

    pub fn add(&self, other: &CoeffVector) -> Result<CoeffVector> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &CoeffVector) -> Result<CoeffVector> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: C64, other: &CoeffVector) -> Result<CoeffVector> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, c) in other.iter() {
            *out.entries.entry(k).or_default() += alpha * c;
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> CoeffVector {
        CoeffVector {
            params: self.params,
            entries: self.entries.iter().map(|(k, c)| (*k, alpha * c)).collect(),
        }
    }

    /// Keeps the entries whose index satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(i64) -> bool) -> CoeffVector {
        CoeffVector {
            params: self.params,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(**k))
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoeffFile::from(self)).expect("coefficient file serialises")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&CoeffFile::from(self)).expect("coefficient file serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoeffFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.try_into()
    }
}

/// On-disk form: `{"series", "nu": [re, im], "delta", "entries": [[k, re, im], ...]}`.
///
/// `gap` is written only for the complementary series, where it is part of
/// the model's validity condition.
#[derive(Serialize, Deserialize)]
struct CoeffFile {
    series: String,
    nu: [f64; 2],
    delta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    entries: Vec<(i64, f64, f64)>,
}

impl From<&CoeffVector> for CoeffFile {
    fn from(v: &CoeffVector) -> Self {
        let p = v.params;
        CoeffFile {
            series: p.series.as_str().to_string(),
            nu: [p.nu.re, p.nu.im],
            delta: p.delta.as_str().to_string(),
            gap: (p.series == Series::Complementary || p.gap != DEFAULT_GAP).then_some(p.gap),
            entries: v.entries.iter().map(|(k, c)| (*k, c.re, c.im)).collect(),
        }
    }
}

impl TryFrom<CoeffFile> for CoeffVector {
    type Error = Error;

    fn try_from(file: CoeffFile) -> Result<Self> {
        let series: Series = file.series.parse()?;
        let delta: Delta = file.delta.parse()?;
        let params = RepParams::new(
            series,
            C64::new(file.nu[0], file.nu[1]),
            delta,
            file.gap.unwrap_or(DEFAULT_GAP),
        )?;
        let mut v = CoeffVector::zero(params);
        let mut prev: Option<i64> = None;
        for (i, (k, re, im)) in file.entries.into_iter().enumerate() {
            if !params.contains(k) {
                return Err(Error::Format(format!(
                    "entry {i} (k = {k}) is not a weight of the {series} model"
                )));
            }
            if prev.is_some_and(|p| p >= k) {
                return Err(Error::Format(format!(
                    "entry {i} (k = {k}) is out of order or duplicated"
                )));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Format(format!("entry {i} (k = {k}) is not finite")));
            }
            prev = Some(k);
            v.entries.insert(k, C64::new(re, im));
        }
        Ok(v)
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// `‖f‖_s = (Σ (1+μ+2k²)^s ‖u_k‖² |f_k|²)^{1/2}`.
pub fn sobolev_norm(f: &CoeffVector, s: SobolevOrder) -> f64 {
    let table = NormTable::new(&f.params, f.radius());
    sobolev_norm_with(f, s, &table)
}

/// As [`sobolev_norm`] with a prebuilt norm table.
pub fn sobolev_norm_with(f: &CoeffVector, s: SobolevOrder, table: &NormTable) -> f64 {
    let mu = f.params.mu;
    let logs: Vec<f64> = f
        .iter()
        .filter(|(_, c)| *c != C64::default())
        .map(|(k, c)| {
            let w = 1.0 + mu + 2.0 * (k as f64) * (k as f64);
            s.0 * w.ln() + table.log_norm_sq(k) + 2.0 * c.norm().ln()
        })
        .collect();
    (0.5 * log_sum_exp(&logs)).exp()
}

/// `(Σ (1+|k|)^{2s - Re ν} |f_k|²)^{1/2}`, equivalent to [`sobolev_norm`].
pub fn equiv_sobolev_norm(f: &CoeffVector, s: SobolevOrder) -> f64 {
    let exponent = 2.0 * s.0 - f.params.operator_nu().re;
    let logs: Vec<f64> = f
        .iter()
        .filter(|(_, c)| *c != C64::default())
        .map(|(k, c)| exponent * (1.0 + k.abs() as f64).ln() + 2.0 * c.norm().ln())
        .collect();
    (0.5 * log_sum_exp(&logs)).exp()
}

/// `Θ^p f`: multiplies `f_k` by `(ik)^p` for integer `p`, by `|k|^p` otherwise.
pub fn theta_power_apply(f: &CoeffVector, p: f64) -> CoeffVector {
    assert!(
        p.is_finite() && p >= 0.0,
        "Θ-power must be finite and non-negative"
    );
    if p == 0.0 {
        return f.clone();
    }
    let integer = p.fract() == 0.0;
    let entries = f
        .entries
        .iter()
        .map(|(&k, &c)| {
            let factor = if k == 0 {
                C64::default()
            } else if integer {
                C64::new(0.0, k as f64).powi(p as i32)
            } else {
                C64::new((k.abs() as f64).powf(p), 0.0)
            };
            (k, factor * c)
        })
        .collect();
    CoeffVector {
        params: f.params,
        entries,
    }
}

/// `f|_n`: keeps `k >= n` for `n > 0` and `k <= n` for `n < 0`.
pub fn restrict(f: &CoeffVector, n: i64) -> Result<CoeffVector> {
    if n == 0 || !f.params.contains(n) {
        return Err(Error::InvalidRestriction { n });
    }
    Ok(if n > 0 {
        f.filter(|k| k >= n)
    } else {
        f.filter(|k| k <= n)
    })
}
