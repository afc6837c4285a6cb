//! Subcommand drivers. Grid points run on the rayon pool; results come back
//! in grid order, so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use twisted_cohomology::basic_solutions::{bound_certificate, weighted_growth};
use twisted_cohomology::fit::{fitted_constant, loglog_slope, sup_ratio};
use twisted_cohomology::obstructions::{distribution_norm_pair, obstruction_report};
use twisted_cohomology::rep_model::{sobolev_norm, CoeffVector, RepParams, SobolevOrder};
use twisted_cohomology::solver::{
    l2_bound_check, solve_full_with, solve_one_sided_at, OracleConfig, SolveOptions,
};
use twisted_cohomology::spectral_ops::apply_x_plus_m;
use twisted_cohomology::Error;

use crate::config::{RunConfig, SweepKind};
use crate::grid::{
    create_dir, model_tag, num, param_fields, random_data, regular_indices, tag, write_csv,
    write_plot, write_text, PARAM_HEADER,
};
use crate::CliError;

/// Whether every check of a command held.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

impl Outcome {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }
}

fn header(extra: &[&'static str]) -> Vec<&'static str> {
    PARAM_HEADER
        .iter()
        .copied()
        .chain(extra.iter().copied())
        .collect()
}

fn row(p: &RepParams, m: f64, k: i64, extra: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut r = param_fields(p, m, k);
    r.extend(extra);
    r
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        tolerance: cfg.tol,
        orders: cfg.orders.clone(),
        modewise: true,
    }
}

fn model_json(p: &RepParams) -> Value {
    json!({
        "series": p.series().to_string(),
        "nu": [p.nu().re, p.nu().im],
        "delta": p.delta().to_string(),
        "gap": p.gap(),
    })
}

pub fn read_coefficients(path: &Path) -> Result<CoeffVector, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    CoeffVector::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- solve

pub fn solve(cfg: &RunConfig, input: &Path, one_sided: Option<i64>) -> Result<Outcome, CliError> {
    cfg.require_twisted()?;
    let g = read_coefficients(input)?;
    let p = *g.params();
    let opts = solve_options(cfg);
    let scale = sobolev_norm(&g, SobolevOrder::ZERO);

    let runs: Vec<(f64, Value, f64, bool)> = cfg
        .m_grid
        .par_iter()
        .map(|&m| -> Result<_, CliError> {
            let (mut value, residual, ok) = match solve_full_with(&g, m, &opts) {
                Ok(r) => (r.to_json_value(), r.residual, true),
                Err(Error::ResidualTooLarge { residual, tolerance }) => (
                    json!({ "m": m, "residual": residual, "error": format!("residual {residual:e} exceeds {tolerance:e}") }),
                    residual,
                    false,
                ),
                Err(e) => return Err(e.into()),
            };
            if let Some(n) = one_sided {
                let split = solve_one_sided_at(&g, n, m, &cfg.orders)?;
                value["one_sided"] = split.to_json_value(m);
            }
            Ok((m, value, residual, ok))
        })
        .collect::<Result<_, _>>()?;

    create_dir(&cfg.out)?;
    let doc = json!({
        "model": model_json(&p),
        "input": serde_json::from_str::<Value>(&g.to_json()).expect("coefficient JSON reparses"),
        "truncation": cfg.truncation,
        "tolerance": cfg.tol,
        "results": runs.iter().map(|r| r.1.clone()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    write_text(&cfg.out.join("solve.json"), &text)?;

    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(m, _, residual, ok)| {
            row(
                &p,
                *m,
                cfg.truncation,
                [
                    num(*residual),
                    num(scale),
                    num(cfg.tol * scale),
                    ok.to_string(),
                ],
            )
        })
        .collect();
    write_csv(
        &cfg.out.join("solve_summary.csv"),
        &header(&["residual", "g_norm", "threshold", "ok"]),
        &rows,
    )?;
    for (m, _, residual, ok) in &runs {
        println!(
            "m = {m}: residual {residual:.3e} against {:.3e} {}",
            cfg.tol * scale,
            if *ok { "ok" } else { "FAILED" }
        );
    }
    Ok(Outcome::from_ok(runs.iter().all(|r| r.3)))
}

// -------------------------------------------------------- verify-bounds

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundsSummary {
    pub rows: usize,
    pub checked: usize,
    pub violations: usize,
}

pub fn verify_bounds(cfg: &RunConfig) -> Result<(Outcome, BoundsSummary), CliError> {
    let tasks: Vec<(RepParams, f64, i64)> = cfg
        .models
        .iter()
        .flat_map(|p| {
            cfg.m_grid.iter().flat_map(move |&m| {
                regular_indices(p, &cfg.n_grid)
                    .into_iter()
                    .map(move |n| (*p, m, n))
            })
        })
        .collect();
    let certs = tasks
        .par_iter()
        .map(|(p, m, n)| bound_certificate(p, *n, *m).map(|c| (*p, c)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut summary = BoundsSummary::default();
    let mut rows = Vec::new();
    for (p, cert) in &certs {
        summary.checked += cert.valid_entries();
        summary.violations += cert.violations();
        for e in &cert.entries {
            rows.push(row(
                p,
                cert.m,
                cfg.truncation,
                [
                    cert.n.to_string(),
                    e.index.to_string(),
                    num(e.b.re),
                    num(e.b.im),
                    num(e.compared),
                    e.bound.map(num).unwrap_or_default(),
                    e.in_validity_region.to_string(),
                    e.holds.to_string(),
                ],
            ));
        }
    }
    summary.rows = rows.len();

    create_dir(&cfg.out)?;
    write_csv(
        &cfg.out.join("bounds.csv"),
        &header(&[
            "n",
            "k",
            "re_b",
            "im_b",
            "weighted_b",
            "bound",
            "valid",
            "holds",
        ]),
        &rows,
    )?;
    let line = format!(
        "violations {} of {} certified entries ({} rows)",
        summary.violations, summary.checked, summary.rows
    );
    write_text(&cfg.out.join("bounds_summary.txt"), &format!("{line}\n"))?;
    println!("{line}");
    Ok((Outcome::from_ok(summary.violations == 0), summary))
}

// ------------------------------------------------ verify-distributions

#[derive(Clone, Copy, Debug)]
enum Case {
    Coboundary(i64),
    Residual(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistributionSummary {
    pub cases: usize,
    pub failures: usize,
}

pub fn verify_distributions(cfg: &RunConfig) -> Result<(Outcome, DistributionSummary), CliError> {
    cfg.require_twisted()?;
    let opts = solve_options(cfg);
    let mut tasks = Vec::new();
    for (mi, p) in cfg.models.iter().enumerate() {
        for (mj, &m) in cfg.m_grid.iter().enumerate() {
            for k in p.index_set().enumerate(cfg.radius) {
                tasks.push((mi, mj, *p, m, Case::Coboundary(k)));
            }
            for s in 0..cfg.samples {
                tasks.push((mi, mj, *p, m, Case::Residual(s)));
            }
        }
    }

    let rows = tasks
        .par_iter()
        .map(
            |&(mi, mj, p, m, case)| -> Result<(Vec<String>, bool), CliError> {
                let (suite, id, n, value, threshold) = match case {
                    Case::Coboundary(k) => {
                        let image = apply_x_plus_m(&CoeffVector::basis(p, k)?, m);
                        let report = obstruction_report(&image, m)?;
                        let (n, worst) = report.values.iter().map(|(&n, d)| (n, d.norm())).fold(
                            (None, 0.0),
                            |acc, (n, v)| if v >= acc.1 { (Some(n), v) } else { acc },
                        );
                        let scale = sobolev_norm(&image, SobolevOrder::ZERO);
                        ("coboundary", k, n, worst, cfg.annihilation_tol * scale)
                    }
                    Case::Residual(s) => {
                        let g = random_data(&p, cfg.radius, cfg.seed, [mi as u64, mj as u64, s]);
                        let residual = match solve_full_with(&g, m, &opts) {
                            Ok(r) => r.residual,
                            Err(Error::ResidualTooLarge { residual, .. }) => residual,
                            Err(e) => return Err(e.into()),
                        };
                        let scale = sobolev_norm(&g, SobolevOrder::ZERO);
                        ("residual", s as i64, None, residual, cfg.tol * scale)
                    }
                };
                let ok = value <= threshold;
                let r = row(
                    &p,
                    m,
                    cfg.truncation,
                    [
                        suite.to_string(),
                        id.to_string(),
                        n.map(|n| n.to_string()).unwrap_or_default(),
                        num(value),
                        num(threshold),
                        ok.to_string(),
                    ],
                );
                Ok((r, ok))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;

    let summary = DistributionSummary {
        cases: rows.len(),
        failures: rows.iter().filter(|r| !r.1).count(),
    };
    create_dir(&cfg.out)?;
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.0).collect();
    write_csv(
        &cfg.out.join("distributions.csv"),
        &header(&["suite", "case", "n", "value", "threshold", "ok"]),
        &rows,
    )?;
    let line = format!("failures {} of {} cases", summary.failures, summary.cases);
    write_text(
        &cfg.out.join("distributions_summary.txt"),
        &format!("{line}\n"),
    )?;
    println!("{line}");
    Ok((Outcome::from_ok(summary.failures == 0), summary))
}

// ---------------------------------------------------------------- sweep

/// One grid point of a sweep and the quantities measured there.
#[derive(Clone, Debug)]
struct Point {
    kind: SweepKind,
    model: usize,
    m: f64,
    t: Option<f64>,
    n: Option<i64>,
    sample: Option<u64>,
    values: Vec<(&'static str, f64)>,
}

impl Point {
    fn get(&self, q: &str) -> f64 {
        self.values
            .iter()
            .find(|v| v.0 == q)
            .map(|v| v.1)
            .unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug)]
enum Task {
    Growth(usize, f64, i64),
    L2(usize, usize, f64, u64),
    Tame(usize, f64, i64),
    Distribution(usize, usize, f64, u64),
}

fn run_task(cfg: &RunConfig, task: Task) -> Result<Vec<Point>, CliError> {
    let point = |kind, model, m, t, n, sample, values| Point {
        kind,
        model,
        m,
        t,
        n,
        sample,
        values,
    };
    Ok(match task {
        Task::Growth(mi, m, n) => {
            let w = weighted_growth(&cfg.models[mi], n, m)?;
            vec![point(
                SweepKind::Growth,
                mi,
                m,
                None,
                Some(n),
                None,
                vec![("weighted_growth", w)],
            )]
        }
        Task::L2(mi, mj, m, s) => {
            let p = &cfg.models[mi];
            let g = random_data(p, cfg.radius, cfg.seed, [mi as u64, mj as u64, s]);
            let (f, bound) = l2_bound_check(&g, m, &OracleConfig::new(cfg.truncation))?;
            vec![point(
                SweepKind::L2,
                mi,
                m,
                None,
                None,
                Some(s),
                vec![("f_norm", f), ("g_norm_over_m", bound)],
            )]
        }
        Task::Tame(mi, m, n) => {
            let p = cfg.models[mi];
            let g = CoeffVector::basis(p, n)?;
            let r = solve_full_with(&g, m, &solve_options(cfg))?;
            r.tame_pairs
                .iter()
                .map(|pair| {
                    point(
                        SweepKind::Tame,
                        mi,
                        m,
                        Some(pair.t),
                        Some(n),
                        None,
                        vec![
                            ("lhs", pair.lhs),
                            ("rhs", pair.rhs),
                            ("ratio", pair.ratio()),
                        ],
                    )
                })
                .collect()
        }
        Task::Distribution(mi, mj, m, s) => {
            let p = cfg.models[mi];
            let g = random_data(&p, cfg.radius, cfg.seed, [mi as u64, mj as u64, s]);
            let mut out = Vec::new();
            for n in p.obstruction_set().iter() {
                for &t in &cfg.orders {
                    let (lhs, rhs) = distribution_norm_pair(&g, n, m, SobolevOrder::new(t)?)?;
                    out.push(point(
                        SweepKind::Distributions,
                        mi,
                        m,
                        Some(t),
                        Some(n),
                        Some(s),
                        vec![("lhs", lhs), ("rhs", rhs)],
                    ));
                }
            }
            out
        }
    })
}

fn sweep_tasks(cfg: &RunConfig, kinds: &[SweepKind]) -> Vec<Task> {
    let mut tasks = Vec::new();
    for &kind in kinds {
        for (mi, p) in cfg.models.iter().enumerate() {
            for (mj, &m) in cfg.m_grid.iter().enumerate() {
                match kind {
                    SweepKind::Growth => tasks.extend(
                        regular_indices(p, &cfg.n_grid)
                            .into_iter()
                            .map(|n| Task::Growth(mi, m, n)),
                    ),
                    SweepKind::L2 => tasks.extend((0..cfg.samples).map(|s| Task::L2(mi, mj, m, s))),
                    SweepKind::Tame => tasks.extend(
                        regular_indices(p, &cfg.n_grid)
                            .into_iter()
                            .map(|n| Task::Tame(mi, m, n)),
                    ),
                    SweepKind::Distributions => {
                        tasks.extend((0..cfg.samples).map(|s| Task::Distribution(mi, mj, m, s)))
                    }
                }
            }
        }
    }
    tasks
}

/// Groups points by a key, keeping the first-appearance order of the keys.
fn group_by<K: Ord + Clone>(points: &[Point], key: impl Fn(&Point) -> K) -> Vec<(K, Vec<&Point>)> {
    let mut order: Vec<K> = Vec::new();
    let mut groups: BTreeMap<K, Vec<&Point>> = BTreeMap::new();
    for p in points {
        let k = key(p);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(p);
    }
    order
        .into_iter()
        .map(|k| {
            let v = groups.remove(&k).unwrap_or_default();
            (k, v)
        })
        .collect()
}

/// Sortable key for `f64` grid values that are never NaN.
fn fkey(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

/// A statistic fitted over one group of sweep points.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub sweep: &'static str,
    /// Position in the configured model list.
    pub model: usize,
    pub m: f64,
    pub t: Option<f64>,
    pub statistic: &'static str,
    pub value: f64,
    pub reference: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSummary {
    pub rows: usize,
    pub fits: Vec<Fit>,
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepSummary, CliError> {
    let mut kinds = cfg.sweeps.clone();
    kinds.sort();
    kinds.dedup();
    if kinds.iter().any(|k| k.twisted()) {
        cfg.require_twisted()?;
    }
    if kinds.contains(&SweepKind::L2)
        && !cfg.models.is_empty()
        && !cfg.m_grid.is_empty()
        && cfg.samples > 0
    {
        let need = 2 * cfg.radius + 4;
        if cfg.truncation < need {
            return Err(CliError::Input(format!(
                "truncation {} too small for data of radius {}; need at least {need}",
                cfg.truncation, cfg.radius
            )));
        }
    }
    let tasks = sweep_tasks(cfg, &kinds);
    let points: Vec<Point> = tasks
        .par_iter()
        .map(|&t| run_task(cfg, t))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    let opt = |x: Option<String>| x.unwrap_or_default();
    let rows: Vec<Vec<String>> = points
        .iter()
        .flat_map(|pt| {
            let p = &cfg.models[pt.model];
            pt.values.iter().map(move |(q, v)| {
                let mut r = vec![pt.kind.name().to_string()];
                r.extend(param_fields(p, pt.m, cfg.truncation));
                r.extend([
                    opt(pt.t.map(num)),
                    opt(pt.n.map(|n| n.to_string())),
                    opt(pt.sample.map(|s| s.to_string())),
                    q.to_string(),
                    num(*v),
                ]);
                r
            })
        })
        .collect();
    create_dir(&cfg.out)?;
    let mut sweep_header = vec!["sweep"];
    sweep_header.extend(header(&["t", "n", "sample", "quantity", "value"]));
    write_csv(&cfg.out.join("sweep.csv"), &sweep_header, &rows)?;

    let plots = cfg.out.join("plots");
    if !points.is_empty() {
        create_dir(&plots)?;
    }
    let mut summary = SweepSummary {
        rows: rows.len(),
        fits: Vec::new(),
    };
    let fit = |sweep, model, m, t, statistic, value, reference| Fit {
        sweep,
        model,
        m,
        t,
        statistic,
        value,
        reference,
    };
    for kind in &kinds {
        let mine: Vec<Point> = points.iter().filter(|p| p.kind == *kind).cloned().collect();
        match kind {
            SweepKind::Growth => {
                for ((mi, _), pts) in group_by(&mine, |p| (p.model, fkey(p.m))) {
                    let m = pts[0].m;
                    let xs: Vec<f64> = pts.iter().map(|p| p.n.unwrap_or(0).abs() as f64).collect();
                    let ys: Vec<f64> = pts.iter().map(|p| p.get("weighted_growth")).collect();
                    write_plot(
                        plots.join(format!(
                            "growth_{}_m{}.dat",
                            model_tag(&cfg.models[mi]),
                            tag(&m.to_string())
                        )),
                        &["n", "weighted_growth"],
                        &xs.iter()
                            .zip(&ys)
                            .map(|(x, y)| vec![*x, *y])
                            .collect::<Vec<_>>(),
                    )?;
                    if let Some(s) = loglog_slope(&xs, &ys) {
                        let bound = (m.abs() + 2.0) / 2.0;
                        summary
                            .fits
                            .push(fit("growth", mi, m, None, "slope", s, Some(bound)));
                    }
                }
            }
            SweepKind::L2 => {
                for (mi, pts) in group_by(&mine, |p| p.model) {
                    write_plot(
                        plots.join(format!("l2_{}.dat", model_tag(&cfg.models[mi]))),
                        &["m", "f_norm", "g_norm_over_m"],
                        &pts.iter()
                            .map(|p| vec![p.m, p.get("f_norm"), p.get("g_norm_over_m")])
                            .collect::<Vec<_>>(),
                    )?;
                }
                for ((mi, _), pts) in group_by(&mine, |p| (p.model, fkey(p.m))) {
                    let lhs: Vec<f64> = pts.iter().map(|p| p.get("f_norm")).collect();
                    let rhs: Vec<f64> = pts.iter().map(|p| p.get("g_norm_over_m")).collect();
                    let s = sup_ratio(&lhs, &rhs);
                    summary
                        .fits
                        .push(fit("l2", mi, pts[0].m, None, "sup_ratio", s, Some(1.0)));
                }
            }
            SweepKind::Tame | SweepKind::Distributions => {
                let prefix = if *kind == SweepKind::Tame {
                    "tame"
                } else {
                    "distribution"
                };
                for ((mi, _, _), pts) in
                    group_by(&mine, |p| (p.model, fkey(p.m), fkey(p.t.unwrap_or(0.0))))
                {
                    let (m, t) = (pts[0].m, pts[0].t.unwrap_or(0.0));
                    let lhs: Vec<f64> = pts.iter().map(|p| p.get("lhs")).collect();
                    let rhs: Vec<f64> = pts.iter().map(|p| p.get("rhs")).collect();
                    let name = format!(
                        "{prefix}_{}_m{}_t{}.dat",
                        model_tag(&cfg.models[mi]),
                        tag(&m.to_string()),
                        tag(&t.to_string())
                    );
                    if *kind == SweepKind::Tame {
                        let data: Vec<Vec<f64>> = pts
                            .iter()
                            .map(|p| vec![p.n.unwrap_or(0) as f64, p.get("ratio")])
                            .collect();
                        write_plot(plots.join(name), &["n", "ratio"], &data)?;
                        if let Some(c) = fitted_constant(&lhs, &rhs) {
                            summary.fits.push(fit(
                                "tame",
                                mi,
                                m,
                                Some(t),
                                "fitted_constant",
                                c,
                                None,
                            ));
                        }
                    } else {
                        let data: Vec<Vec<f64>> =
                            rhs.iter().zip(&lhs).map(|(r, l)| vec![*r, *l]).collect();
                        write_plot(plots.join(name), &["rhs", "lhs"], &data)?;
                    }
                    let s = sup_ratio(&lhs, &rhs);
                    summary
                        .fits
                        .push(fit(kind.name(), mi, m, Some(t), "sup_ratio", s, None));
                }
            }
        }
    }

    let fit_rows: Vec<Vec<String>> = summary
        .fits
        .iter()
        .map(|f| {
            let mut r = vec![f.sweep.to_string()];
            r.extend(param_fields(&cfg.models[f.model], f.m, cfg.truncation));
            r.extend([
                opt(f.t.map(num)),
                f.statistic.to_string(),
                num(f.value),
                opt(f.reference.map(num)),
            ]);
            r
        })
        .collect();
    let mut fit_header = vec!["sweep"];
    fit_header.extend(header(&["t", "statistic", "value", "reference"]));
    write_csv(&cfg.out.join("fits.csv"), &fit_header, &fit_rows)?;
    println!(
        "{} measurements, {} fitted statistics",
        summary.rows,
        summary.fits.len()
    );
    Ok(summary)
}

// --------------------------------------------------------------- report

/// Runs every suite into the output directory and writes `report.json`.
pub fn report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (bounds_outcome, bounds) = verify_bounds(cfg)?;
    let (dist_outcome, dist) = verify_distributions(cfg)?;
    let sweeps = sweep(cfg)?;
    let ok = bounds_outcome == Outcome::Passed && dist_outcome == Outcome::Passed;
    let fits: Vec<Value> = sweeps
        .fits
        .iter()
        .map(|f| {
            json!({
                "sweep": f.sweep,
                "model": cfg.models[f.model].label(),
                "m": f.m,
                "t": f.t,
                "statistic": f.statistic,
                "value": f.value,
                "reference": f.reference,
            })
        })
        .collect();
    let doc = json!({
        "seed": cfg.seed,
        "truncation": cfg.truncation,
        "models": cfg.models.iter().map(model_json).collect::<Vec<_>>(),
        "m": cfg.m_grid,
        "bounds": { "rows": bounds.rows, "checked": bounds.checked, "violations": bounds.violations },
        "distributions": { "cases": dist.cases, "failures": dist.failures },
        "sweep": { "rows": sweeps.rows, "fits": fits },
        "passed": ok,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    write_text(&cfg.out.join("report.json"), &text)?;
    println!(
        "report: {}",
        if ok {
            "all verifications passed"
        } else {
            "verification FAILED"
        }
    );
    Ok(Outcome::from_ok(ok))
}
