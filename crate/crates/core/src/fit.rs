//! Fitting helpers for exponent and constant estimates.

/// Least-squares slope of `log y` against `log x`. Pairs with a non-positive
/// coordinate are skipped; returns `None` with fewer than two usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// `C` minimising `Σ (log lhs - log C·rhs)²`, i.e. the geometric mean of the ratios.
pub fn fitted_constant(lhs: &[f64], rhs: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = lhs
        .iter()
        .zip(rhs)
        .filter(|(l, r)| **l > 0.0 && **r > 0.0)
        .map(|(l, r)| (l / r).ln())
        .collect();
    if logs.is_empty() {
        return None;
    }
    Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Largest ratio `lhs / rhs` over pairs with a positive right side.
pub fn sup_ratio(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(l, r)| l / r)
        .fold(0.0, f64::max)
}
