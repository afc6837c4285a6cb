//! Grid plumbing shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twisted_cohomology::rep_model::{CoeffVector, RepParams, C64};

use crate::CliError;

/// Column names carried by every report row.
pub const PARAM_HEADER: [&str; 5] = ["series", "nu", "delta", "m", "K"];

/// Shortest round-trip form, switching to exponent notation for very small or large values.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_complex(c: C64) -> String {
    format!("{}{:+}i", c.re, c.im)
}

/// `(series, ν, δ, m, K)` as CSV fields.
pub fn param_fields(p: &RepParams, m: f64, k: i64) -> Vec<String> {
    vec![
        p.series().to_string(),
        fmt_complex(p.nu()),
        p.delta().to_string(),
        num(m),
        k.to_string(),
    ]
}

/// File-name-safe rendering of a label.
pub fn tag(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '+' => 'p',
            '-' => 'm',
            '.' => 'd',
            c if c.is_ascii_alphanumeric() => c,
            _ => '_',
        })
        .collect()
}

pub fn model_tag(p: &RepParams) -> String {
    tag(&format!(
        "{}_{}_{}",
        p.series(),
        fmt_complex(p.nu()),
        p.delta()
    ))
}

/// Random data with support radius `radius`.
///
/// The stream is fixed by `(model, twist, sample)` positions in the grid, so
/// the vector does not depend on which worker generates it.
pub fn random_data(p: &RepParams, radius: i64, seed: u64, stream: [u64; 3]) -> CoeffVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream[0] << 40) ^ (stream[1] << 20) ^ stream[2]);
    let entries = p.index_set().enumerate(radius).into_iter().map(|k| {
        (
            k,
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
    });
    CoeffVector::from_entries(*p, entries).expect("enumerated indices lie in the model")
}

/// Indices of the grid at which a basic solution exists for `p`.
pub fn regular_indices(p: &RepParams, grid: &[i64]) -> Vec<i64> {
    grid.iter()
        .copied()
        .filter(|&n| p.index_set().contains(n) && !p.obstruction_set().contains(n))
        .collect()
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a CSV with the header always present, even without rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Whitespace-separated columns with a `#` header line.
pub fn write_plot(path: PathBuf, columns: &[&str], points: &[Vec<f64>]) -> Result<(), CliError> {
    let mut text = format!("# {}\n", columns.join(" "));
    for p in points {
        let line: Vec<String> = p.iter().copied().map(num).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    write_text(&path, &text)
}
