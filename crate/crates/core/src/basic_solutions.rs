//! Basic solutions `f_{n}` with `(X+m) f_{n} = u_n + Σ_{j∈S} d_j u_j`.
//!
//! For `n > 0` the coefficients `b_{n,j}` are produced by the downward
//! three-term recursion
//!
//! ```text
//! b_j = (2([j+2 = n] - m b_{j+2}) + (j+3-ν) b_{j+4}) / (j+1+ν)
//! ```
//!
//! starting from `b_n = b_{n+2} = 0` and stopping at `max S`. For `n < 0` the
//! mirrored upward recursion
//!
//! ```text
//! b_j = (2(m b_{j-2} - [j-2 = n]) + (j-3+ν) b_{j-4}) / (j-1-ν)
//! ```
//!
//! runs up to `min S`. Each step clears the coefficient of `u_{j∓2}` in the
//! image, so the image is `u_n` plus terms on `S` only.

use std::collections::BTreeMap;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;

use crate::error::{Error, Result};
use crate::rep_model::{
    sobolev_norm_with, CoeffVector, NormTable, RepParams, Series, SobolevOrder, C64,
};

/// Scalars the recursion can run over: doubles, or exact rationals.
pub trait Scalar: Num + Clone + Neg<Output = Self> {
    fn int(i: i64) -> Self;
}

impl Scalar for C64 {
    fn int(i: i64) -> Self {
        C64::new(i as f64, 0.0)
    }
}

impl Scalar for BigRational {
    fn int(i: i64) -> Self {
        BigRational::from_integer(BigInt::from(i))
    }
}

fn get<F: Scalar>(b: &BTreeMap<i64, F>, k: i64) -> F {
    b.get(&k).cloned().unwrap_or_else(F::zero)
}

fn check_target(params: &RepParams, n: i64) -> Result<()> {
    if !params.contains(n) {
        return Err(Error::IndexOutsideModel { k: n });
    }
    if params.obstruction_set().contains(n) {
        return Err(Error::InObstructionSet { n });
    }
    Ok(())
}

/// Runs the recursion for target `n` and returns `(b, d)`.
fn recurse<F: Scalar>(
    params: &RepParams,
    n: i64,
    nu: F,
    m: F,
) -> Result<(BTreeMap<i64, F>, BTreeMap<i64, F>)> {
    check_target(params, n)?;
    let s = params.obstruction_set();
    let two = F::int(2);
    let mut b: BTreeMap<i64, F> = BTreeMap::new();
    if n > 0 {
        let lo = s.iter().max().expect("obstruction set is nonempty");
        let mut j = n - 2;
        while j >= lo {
            let den = F::int(j + 1) + nu.clone();
            if den.is_zero() {
                return Err(Error::ZeroDenominator { index: j });
            }
            let src = if j + 2 == n { F::one() } else { F::zero() };
            let num = two.clone() * (src - m.clone() * get(&b, j + 2))
                + (F::int(j + 3) - nu.clone()) * get(&b, j + 4);
            b.insert(j, num / den);
            j -= 2;
        }
    } else {
        let hi = s.iter().min().expect("obstruction set is nonempty");
        let mut j = n + 2;
        while j <= hi {
            let den = F::int(j - 1) - nu.clone();
            if den.is_zero() {
                return Err(Error::ZeroDenominator { index: j });
            }
            let src = if j - 2 == n { F::one() } else { F::zero() };
            let num = two.clone() * (m.clone() * get(&b, j - 2) - src)
                + (F::int(j - 3) + nu.clone()) * get(&b, j - 4);
            b.insert(j, num / den);
            j += 2;
        }
    }
    let d = s
        .iter()
        .map(|k| {
            let up = -(F::int(k + 1) - nu.clone()) / two.clone() * get(&b, k + 2);
            let mid = m.clone() * get(&b, k);
            let down = (F::int(k - 1) + nu.clone()) / two.clone() * get(&b, k - 2);
            (k, up + mid + down)
        })
        .collect();
    Ok((b, d))
}

/// The basic solution `f_{n}` and its correction coefficients on `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicSolution {
    pub params: RepParams,
    pub n: i64,
    pub m: f64,
    /// `b_{n,k}`, keyed by `k`.
    pub b: BTreeMap<i64, C64>,
    /// `d_j` for `j ∈ S`.
    pub d: BTreeMap<i64, C64>,
}

impl BasicSolution {
    pub fn coeff(&self, k: i64) -> C64 {
        self.b.get(&k).copied().unwrap_or_default()
    }

    /// `f_{n}` as a vector.
    pub fn vector(&self) -> CoeffVector {
        CoeffVector::from_map_unchecked(self.params, self.b.clone())
    }

    /// `𝔘_n = u_n + Σ_{j∈S} d_j u_j`, the image of `f_{n}` under `X + m`.
    pub fn image(&self) -> CoeffVector {
        let mut map = self.d.clone();
        map.insert(self.n, C64::new(1.0, 0.0));
        CoeffVector::from_map_unchecked(self.params, map)
    }
}

/// Builds `f_{n}` in double precision.
pub fn basic_solution(params: &RepParams, n: i64, m: f64) -> Result<BasicSolution> {
    if !m.is_finite() {
        return Err(Error::InvalidTwist(m));
    }
    let (b, d) = recurse(params, n, params.operator_nu(), C64::new(m, 0.0))?;
    Ok(BasicSolution {
        params: *params,
        n,
        m,
        b,
        d,
    })
}

/// Exact coefficients of `f_{n}` for integer `ν` and rational `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactBasicSolution {
    pub n: i64,
    pub b: BTreeMap<i64, BigRational>,
    pub d: BTreeMap<i64, BigRational>,
}

/// Replays the recursion in rational arithmetic.
pub fn basic_solution_exact(
    params: &RepParams,
    n: i64,
    m: &BigRational,
) -> Result<ExactBasicSolution> {
    let nu = params.integer_nu().ok_or(Error::NonIntegerParameter)?;
    let (b, d) = recurse(params, n, BigRational::int(nu), m.clone())?;
    Ok(ExactBasicSolution { n, b, d })
}

/// One supported index of a bound certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateEntry {
    /// Step count `k` (the index is `n - 2k`, mirrored for `n < 0`).
    pub step: i64,
    pub index: i64,
    pub b: C64,
    /// `|b|` for the principal and complementary series, `|b|·‖u_{n-2k}‖/‖u_n‖` for discrete.
    pub compared: f64,
    /// The majorant `c_{n-2k}`; `None` where it is not finite.
    pub bound: Option<f64>,
    pub in_validity_region: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    pub n: i64,
    pub m: f64,
    pub entries: Vec<CertificateEntry>,
}

impl BoundCertificate {
    /// Entries inside the validity region where the majorant fails.
    pub fn violations(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.in_validity_region && !e.holds)
            .count()
    }

    pub fn valid_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.in_validity_region).count()
    }
}

/// The positive-index model whose chain mirrors the one at `n < 0`.
fn mirrored(params: &RepParams) -> Result<RepParams> {
    match params.series() {
        Series::DiscreteAntiholomorphic => RepParams::new(
            Series::DiscreteHolomorphic,
            params.operator_nu(),
            crate::rep_model::Delta::Plus,
            params.gap(),
        ),
        _ => Ok(*params),
    }
}

/// Compares `|b_{n,n-2k}|` against the series majorant at every supported index.
///
/// Negative `n` walks its own chain upwards, `b_{n,n+2k}` taking the place of
/// `b_{|n|,|n|-2k}`, with the majorants of the reflected model.
pub fn bound_certificate(params: &RepParams, n: i64, m: f64) -> Result<BoundCertificate> {
    let sol = basic_solution(params, n, m)?;
    let (model, pos) = if n < 0 {
        (mirrored(params)?, -n)
    } else {
        (*params, n)
    };
    // (index in the reflected chain, coefficient), nearest to n first
    let chain: Vec<(i64, C64)> = if n < 0 {
        sol.b.iter().map(|(&k, &b)| (-k, b)).collect()
    } else {
        sol.b.iter().rev().map(|(&k, &b)| (k, b)).collect()
    };
    let nu = model.operator_nu();
    let am = m.abs();
    let table = NormTable::new(&model, pos);
    let nf = pos as f64;
    let mut prod = 1.0_f64;
    let mut entries = Vec::with_capacity(chain.len());
    for (step, (idx, b)) in (1_i64..).zip(chain) {
        let k = step as f64;
        let (bound, compared, valid) = match model.series() {
            Series::Principal => {
                prod *= 1.0 + am / (C64::new(nf - 2.0 * k + 1.0, 0.0) + nu).norm();
                let c = 2.0 / (C64::new(nf - 2.0 * k + 1.0, 0.0) + nu).norm() * prod;
                (Some(c), b.norm(), nf - 2.0 * k >= 6f64.max(m * m))
            }
            Series::Complementary => {
                let nu = nu.re;
                // the majorant stops at index 0, reached only by the chains below zero
                let den = nf - 2.0 * k - 1.0 + nu;
                prod = if den > 0.0 {
                    prod * (1.0 + (am + 2.0 - nu) / den)
                } else {
                    f64::INFINITY
                };
                let c = 4.0 / (nf - 2.0 * k + 1.0 + nu) * prod;
                let valid = nf - 2.0 * k - nu > 7f64.max(2.0 * am * (am + 2.0));
                (c.is_finite().then_some(c), b.norm(), valid)
            }
            _ => {
                let nu = nu.re;
                let den = nf - 2.0 * k - 1.0 - nu;
                prod = if den > 0.0 {
                    prod * (1.0 + am / den)
                } else {
                    f64::INFINITY
                };
                let sq = (nf - 2.0 * k + 1.0).powi(2) - nu * nu;
                let c = if sq > 0.0 {
                    2.0 / sq.sqrt() * prod
                } else {
                    f64::INFINITY
                };
                let compared = b.norm() * table.norm_ratio(idx, pos);
                let valid = nf - 2.0 * k - nu > 6f64.max(2.0 * m * m + 2.0);
                (c.is_finite().then_some(c), compared, valid)
            }
        };
        let holds = bound.is_none_or(|c| compared <= c * (1.0 + 1e-12));
        entries.push(CertificateEntry {
            step,
            index: if n < 0 { -idx } else { idx },
            b,
            compared,
            bound,
            in_validity_region: valid,
            holds,
        });
    }
    Ok(BoundCertificate { n, m, entries })
}

/// `max_k |b_{n,k}|·‖u_k‖/‖u_n‖` over the support of `f_{n}`.
pub fn weighted_growth(params: &RepParams, n: i64, m: f64) -> Result<f64> {
    let sol = basic_solution(params, n, m)?;
    let table = NormTable::new(params, n.abs() + 2);
    Ok(sol
        .b
        .iter()
        .map(|(&k, b)| b.norm() * table.norm_ratio(k, n))
        .fold(0.0, f64::max))
}

/// `(‖f_{n}‖_t, (1+μ+2n²)^{t/2}·|n|^{(|m|+3)/2}·‖u_n‖)`.
pub fn basic_solution_norm_bound(
    params: &RepParams,
    n: i64,
    m: f64,
    t: SobolevOrder,
) -> Result<(f64, f64)> {
    let sol = basic_solution(params, n, m)?;
    let table = NormTable::new(params, n.abs() + 2);
    let lhs = sobolev_norm_with(&sol.vector(), t, &table);
    let nf = n as f64;
    let rhs = (1.0 + params.mu() + 2.0 * nf * nf).powf(t.value() / 2.0)
        * nf.abs().powf((m.abs() + 3.0) / 2.0)
        * table.norm(n);
    Ok((lhs, rhs))
}
