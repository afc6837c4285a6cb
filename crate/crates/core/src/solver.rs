//! Full and one-sided solutions, the truncated least-squares oracle, and the
//! norm pairs used for the tame estimates.

use serde::Serialize;
use serde_json::{json, Value};

use crate::banded::{lstsq, BandRow};
use crate::error::{Error, Result};
use crate::obstructions::{
    check_twist, one_sided_split, report_and_solution, ObstructionReport, SplitReport,
};
use crate::rep_model::{
    restrict, sobolev_norm, theta_power_apply, CoeffVector, NormTable, SobolevOrder, C64,
};
use crate::spectral_ops::{apply_x_plus_m, basis_action};

/// Default Sobolev orders at which estimate pairs are recorded.
pub const DEFAULT_ORDERS: [f64; 3] = [0.0, 1.0, 2.0];

/// `(t, ‖f‖_t, ‖g‖_{t+loss})` for one order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormPair {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl NormPair {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Mode-wise bound data: `‖f_n u_n‖_t` against `‖Θ^p(g|_{n±2})‖_{t+1/2}` for
/// `p = (|m|+3)/2` and `p = (|m|+5)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModewisePair {
    pub t: f64,
    pub n: i64,
    pub lhs: f64,
    pub rhs_three: f64,
    pub rhs_five: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub m: f64,
    pub f: CoeffVector,
    pub obstructions: ObstructionReport,
    /// `‖(X+m)f - g - Σ D_n(g) u_n‖₀`.
    pub residual: f64,
    /// Pairs `(t, ‖f‖_t, ‖g₁‖_{t+|m|/2+3})` with `g₁ = g + Σ D_n(g) u_n`.
    pub tame_pairs: Vec<NormPair>,
    pub modewise: Vec<ModewisePair>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Residual tolerance relative to `‖g‖₀`.
    pub tolerance: f64,
    pub orders: Vec<f64>,
    pub modewise: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-9,
            orders: DEFAULT_ORDERS.to_vec(),
            modewise: true,
        }
    }
}

fn check_nonzero_twist(m: f64) -> Result<()> {
    check_twist(m)?;
    if m == 0.0 {
        return Err(Error::Untwisted);
    }
    Ok(())
}

fn orders(ts: &[f64]) -> Result<Vec<SobolevOrder>> {
    ts.iter().map(|&t| SobolevOrder::new(t)).collect()
}

/// `f = Σ_{n∉S} g_n f_{n}` with the obstruction values and estimate pairs.
pub fn solve_full(g: &CoeffVector, m: f64) -> Result<SolveResult> {
    solve_full_with(g, m, &SolveOptions::default())
}

pub fn solve_full_with(g: &CoeffVector, m: f64, opts: &SolveOptions) -> Result<SolveResult> {
    check_nonzero_twist(m)?;
    let ts = orders(&opts.orders)?;
    let p = *g.params();
    let (obstructions, f) = report_and_solution(g, m)?;
    let g1 = g.add(&obstructions.correction(p))?;
    let residual = sobolev_norm(&apply_x_plus_m(&f, m).sub(&g1)?, SobolevOrder::ZERO);
    let scale = sobolev_norm(g, SobolevOrder::ZERO);
    if residual > opts.tolerance * scale {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: opts.tolerance * scale,
        });
    }

    let loss = m.abs() / 2.0 + 3.0;
    let table = NormTable::new(&p, f.radius().max(g1.radius()) + 4);
    let tame_pairs = ts
        .iter()
        .map(|&t| NormPair {
            t: t.value(),
            lhs: sobolev_norm(&f, t),
            rhs: sobolev_norm(&g1, t.shifted(loss)),
        })
        .collect();

    let mut modewise = Vec::new();
    if opts.modewise {
        for (n, fnv) in f.iter() {
            if n == 0 || fnv == C64::default() {
                continue;
            }
            let tail = restrict(&g1, if n > 0 { n + 2 } else { n - 2 })?;
            let three = theta_power_apply(&tail, (m.abs() + 3.0) / 2.0);
            let five = theta_power_apply(&tail, (m.abs() + 5.0) / 2.0);
            let w = 1.0 + p.mu() + 2.0 * (n as f64).powi(2);
            for &t in &ts {
                modewise.push(ModewisePair {
                    t: t.value(),
                    n,
                    lhs: fnv.norm() * w.powf(t.value() / 2.0) * table.norm(n),
                    rhs_three: sobolev_norm(&three, t.shifted(0.5)),
                    rhs_five: sobolev_norm(&five, t.shifted(0.5)),
                });
            }
        }
    }

    Ok(SolveResult {
        m,
        f,
        obstructions,
        residual,
        tame_pairs,
        modewise,
    })
}

fn complex_json(c: C64) -> Value {
    json!([c.re, c.im])
}

fn vector_json(v: &CoeffVector) -> Value {
    serde_json::from_str(&v.to_json()).expect("coefficient JSON reparses")
}

impl SolveResult {
    pub fn to_json_value(&self) -> Value {
        let obstructions: serde_json::Map<String, Value> = self
            .obstructions
            .values
            .iter()
            .map(|(n, d)| (n.to_string(), complex_json(*d)))
            .collect();
        json!({
            "m": self.m,
            "f": vector_json(&self.f),
            "obstructions": obstructions,
            "obstruction_order": self.obstructions.order,
            "residual": self.residual,
            "tame_pairs": self.tame_pairs,
            "modewise": self.modewise,
        })
    }
}

/// One-sided solution with its estimate pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSidedResult {
    pub split: SplitReport,
    /// `(t, ‖f̃‖_t, ‖g|_n‖_{t+|m|/2+3})`.
    pub solution_pairs: Vec<NormPair>,
    /// `(t, ‖g̃‖_t, ‖g|_n‖_{t+|m|/2+4})`.
    pub remainder_pairs: Vec<NormPair>,
}

impl OneSidedResult {
    pub fn f_tilde(&self) -> &CoeffVector {
        &self.split.f_tilde
    }

    pub fn to_json_value(&self, m: f64) -> Value {
        let s = &self.split;
        json!({
            "m": m,
            "n": s.n,
            "f_tilde": vector_json(&s.f_tilde),
            "g_tilde": vector_json(&s.g_tilde),
            "companion": s.companion,
            "closed_form": [complex_json(s.closed_form.0), complex_json(s.closed_form.1)],
            "diagnostics": s.diagnostics,
            "solution_pairs": self.solution_pairs,
            "remainder_pairs": self.remainder_pairs,
        })
    }
}

pub fn solve_one_sided(g: &CoeffVector, n: i64, m: f64) -> Result<OneSidedResult> {
    solve_one_sided_at(g, n, m, &DEFAULT_ORDERS)
}

pub fn solve_one_sided_at(g: &CoeffVector, n: i64, m: f64, ts: &[f64]) -> Result<OneSidedResult> {
    let ts = orders(ts)?;
    let split = one_sided_split(g, n, m)?;
    let pair = |v: &CoeffVector, t: SobolevOrder, loss: f64| NormPair {
        t: t.value(),
        lhs: sobolev_norm(v, t),
        rhs: sobolev_norm(g, t.shifted(loss)),
    };
    let solution_pairs = ts
        .iter()
        .map(|&t| pair(&split.f_tilde, t, m.abs() / 2.0 + 3.0))
        .collect();
    let remainder_pairs = ts
        .iter()
        .map(|&t| pair(&split.g_tilde, t, m.abs() / 2.0 + 4.0))
        .collect();
    Ok(OneSidedResult {
        split,
        solution_pairs,
        remainder_pairs,
    })
}

/// Truncation settings for the least-squares oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// Unknowns are the `f_k` with `|k| <= truncation`.
    pub truncation: i64,
    /// Largest accepted `max|R_ii| / min|R_ii|` of the triangular factor.
    pub max_condition: f64,
}

impl OracleConfig {
    pub fn new(truncation: i64) -> Self {
        OracleConfig {
            truncation,
            max_condition: 1e12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    /// The solution on the interior `|k| <= K - 4`.
    pub f: CoeffVector,
    /// The solution on all of `|k| <= K`.
    pub full: CoeffVector,
    pub condition: f64,
    /// Weighted norm of the unmatched part of the right-hand side.
    pub residual: f64,
}

/// Solves the truncated coefficient system in the weighted least-squares sense.
///
/// Unknowns are the `f_k` with `|k| <= K`; equations are every `g_k` the
/// unknowns touch, including the two just outside the window, so the boundary
/// is left free. Rows and columns are scaled by the basis norms, which makes
/// `X` skew-adjoint and bounds the smallest singular value below by `|m|`.
pub fn oracle_banded_solve(
    rhs: &CoeffVector,
    m: f64,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    check_twist(m)?;
    let p = *rhs.params();
    let k_max = cfg.truncation;
    let required = 2 * rhs.radius() + 4;
    if k_max < required {
        return Err(Error::TruncationTooSmall {
            required,
            got: k_max,
        });
    }
    let cols = p.index_set().enumerate(k_max);
    let mut row_idx: Vec<i64> = Vec::new();
    for &k in &cols {
        let (up, diag, down) = basis_action(&p, k, m);
        for (t, w) in [(k - 2, down), (k, diag), (k + 2, up)] {
            if (w != C64::default() || t == k) && row_idx.last().is_none_or(|&l| t > l) {
                row_idx.push(t);
            }
        }
    }
    // rows are ascending; the first column sits at row `off`
    let off = row_idx.iter().position(|&t| t == cols[0]).unwrap_or(0);
    let table = NormTable::new(&p, k_max + 2);
    let col_pos = |k: i64| -> Option<usize> {
        let first = cols.first()?;
        let i = (k - first) / 2;
        (k >= *first && i < cols.len() as i64).then_some(i as usize)
    };

    let mut rows = Vec::with_capacity(row_idx.len());
    for &t in &row_idx {
        let mut start = None;
        let mut vals = Vec::new();
        for k in [t - 2, t, t + 2] {
            let Some(ci) = col_pos(k) else { continue };
            let (up, diag, down) = basis_action(&p, k, m);
            let w = match t - k {
                2 => up,
                0 => diag,
                _ => down,
            };
            start.get_or_insert(ci);
            vals.push(w * (0.5 * (table.log_norm_sq(t) - table.log_norm_sq(k))).exp());
        }
        let b = rhs.get(t) * table.norm(t);
        rows.push(BandRow {
            start: start.unwrap_or(0),
            vals,
            rhs: b,
        });
    }
    if let Some((k, _)) = rhs
        .iter()
        .find(|(k, c)| *c != C64::default() && !row_idx.contains(k))
    {
        return Err(Error::TruncationTooSmall {
            required: k.abs(),
            got: k_max,
        });
    }

    let sol = lstsq(rows, cols.len(), off + 1);
    if sol.condition.is_nan() || sol.condition > cfg.max_condition {
        return Err(Error::IllConditioned {
            cond: sol.condition,
        });
    }
    let full_map = cols
        .iter()
        .zip(&sol.x)
        .map(|(&k, x)| (k, x / table.norm(k)))
        .collect();
    let full = CoeffVector::from_map_unchecked(p, full_map);
    let f = full.filter(|k| k.abs() <= k_max - 4);
    Ok(OracleSolution {
        f,
        full,
        condition: sol.condition,
        residual: sol.residual,
    })
}

/// `(‖f‖₀, ‖g‖₀/|m|)` for the oracle solution of `(X+m)f = g` with no correction.
pub fn l2_bound_check(g: &CoeffVector, m: f64, cfg: &OracleConfig) -> Result<(f64, f64)> {
    check_nonzero_twist(m)?;
    let sol = oracle_banded_solve(g, m, cfg)?;
    Ok((
        sobolev_norm(&sol.f, SobolevOrder::ZERO),
        sobolev_norm(g, SobolevOrder::ZERO) / m.abs(),
    ))
}

/// `‖f‖_t / ‖g + Σ D_n(g) u_n‖_{t+|m|/2+3}` for the full solution `f`.
pub fn tame_ratio(g: &CoeffVector, m: f64, t: SobolevOrder) -> Result<f64> {
    check_nonzero_twist(m)?;
    let (report, f) = report_and_solution(g, m)?;
    let num = sobolev_norm(&f, t);
    if num == 0.0 {
        return Ok(0.0);
    }
    let g1 = g.add(&report.correction(*g.params()))?;
    let den = sobolev_norm(&g1, t.shifted(m.abs() / 2.0 + 3.0));
    if den == 0.0 {
        return Err(Error::ZeroDenominatorNorm);
    }
    Ok(num / den)
}
