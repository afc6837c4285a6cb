//! Least squares for narrow-band complex systems by Givens QR.
//!
//! Row `r` has nonzeros only in a short contiguous column window; rotations
//! keep the windows short, so the whole factorisation is linear in the size.

use crate::rep_model::C64;

#[derive(Clone, Debug)]
pub(crate) struct BandRow {
    pub start: usize,
    pub vals: Vec<C64>,
    pub rhs: C64,
}

impl BandRow {
    fn get(&self, c: usize) -> C64 {
        if c < self.start {
            return C64::default();
        }
        self.vals.get(c - self.start).copied().unwrap_or_default()
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }
}

pub(crate) struct LstsqSolution {
    pub x: Vec<C64>,
    /// `max |R_ii| / min |R_ii|`.
    pub condition: f64,
    /// Norm of the part of the right-hand side outside the column space.
    pub residual: f64,
}

/// `(c·p + s·q, -conj(s)·p + c·q)` over the union of both windows.
fn rotate(p: &BandRow, q: &BandRow, c: f64, s: C64) -> (BandRow, BandRow) {
    let start = p.start.min(q.start);
    let end = p.end().max(q.end());
    let mut a = Vec::with_capacity(end - start);
    let mut b = Vec::with_capacity(end - start);
    for col in start..end {
        let (x, y) = (p.get(col), q.get(col));
        a.push(x * c + s * y);
        b.push(-s.conj() * x + y * c);
    }
    let ra = p.rhs * c + s * q.rhs;
    let rb = -s.conj() * p.rhs + q.rhs * c;
    (
        BandRow {
            start,
            vals: a,
            rhs: ra,
        },
        BandRow {
            start,
            vals: b,
            rhs: rb,
        },
    )
}

/// Minimises `‖A x - rhs‖` for `rows.len() >= ncols` rows given in band form.
///
/// Every nonzero of column `c` must sit in rows `c ..= c + lower`.
pub(crate) fn lstsq(mut rows: Vec<BandRow>, ncols: usize, lower: usize) -> LstsqSolution {
    let nrows = rows.len();
    debug_assert!(nrows >= ncols);
    for col in 0..ncols {
        for j in col + 1..=(col + lower).min(nrows - 1) {
            let b = rows[j].get(col);
            if b == C64::default() {
                continue;
            }
            let a = rows[col].get(col);
            if a == C64::default() {
                rows.swap(col, j);
                continue;
            }
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let alpha = a / a.norm();
            let c = a.norm() / r;
            let s = alpha * b.conj() / r;
            let (np, nq) = rotate(&rows[col], &rows[j], c, s);
            rows[col] = np;
            rows[j] = nq;
        }
        // drop the exact zero left at the front of the eliminated rows
        for row in rows.iter_mut().skip(col + 1).take(lower) {
            if row.start == col && !row.vals.is_empty() {
                row.start += 1;
                row.vals.remove(0);
            }
        }
    }

    let diag: Vec<f64> = (0..ncols).map(|i| rows[i].get(i).norm()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if ncols == 0 {
        1.0
    } else if dmin == 0.0 {
        f64::INFINITY
    } else {
        dmax / dmin
    };

    let mut x = vec![C64::default(); ncols];
    if condition.is_finite() {
        for i in (0..ncols).rev() {
            let row = &rows[i];
            let mut acc = row.rhs;
            for col in i + 1..row.end().min(ncols) {
                acc -= row.get(col) * x[col];
            }
            x[i] = acc / row.get(i);
        }
    }
    let residual = rows[ncols..]
        .iter()
        .map(|r| r.rhs.norm_sqr())
        .sum::<f64>()
        .sqrt();
    LstsqSolution {
        x,
        condition,
        residual,
    }
}
