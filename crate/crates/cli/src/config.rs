//! Run configuration: a flat `key = value` file.
//!
//! ```text
//! # comments run to the end of the line
//! model = principal 2i -          # series nu [delta] [gap], repeatable
//! model = complementary 0.3
//! m = 0.5, 1, 2.7, -1.3
//! n = 2..200, 400..1000:100        # integers, a..b or a..b:step (inclusive)
//! orders = 0, 1, 2
//! truncation = 500
//! tol = 1e-9
//! annihilation_tol = 1e-10
//! seed = 7
//! samples = 20
//! radius = 60
//! sweeps = growth, l2, tame, distributions
//! out = results
//! ```
//!
//! Lists may be separated by commas or whitespace and may be empty.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use twisted_cohomology::rep_model::{
    make_params, Delta, RepParams, Series, SobolevOrder, DEFAULT_GAP,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepKind {
    Growth,
    L2,
    Tame,
    Distributions,
}

impl SweepKind {
    pub const ALL: [SweepKind; 4] = [
        SweepKind::Growth,
        SweepKind::L2,
        SweepKind::Tame,
        SweepKind::Distributions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Growth => "growth",
            SweepKind::L2 => "l2",
            SweepKind::Tame => "tame",
            SweepKind::Distributions => "distributions",
        }
    }

    /// Whether the sweep needs `m != 0`.
    pub fn twisted(self) -> bool {
        self != SweepKind::Growth
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown sweep '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub models: Vec<RepParams>,
    pub m_grid: Vec<f64>,
    pub n_grid: Vec<i64>,
    pub orders: Vec<f64>,
    pub truncation: i64,
    pub tol: f64,
    pub annihilation_tol: f64,
    pub seed: u64,
    pub samples: u64,
    pub radius: i64,
    pub sweeps: Vec<SweepKind>,
    pub out: PathBuf,
}

fn default_models() -> Vec<RepParams> {
    let mk = |s, re, im, d| {
        make_params(s, Complex64::new(re, im), d, DEFAULT_GAP).expect("default model")
    };
    vec![
        mk(Series::Principal, 0.0, 1.0, Delta::Plus),
        mk(Series::Principal, 0.0, 1.0, Delta::Minus),
        mk(Series::Principal, 0.0, 2.0, Delta::Plus),
        mk(Series::Principal, 0.0, 2.0, Delta::Minus),
        mk(Series::Complementary, 0.3, 0.0, Delta::Plus),
        mk(Series::Complementary, -0.6, 0.0, Delta::Plus),
        mk(Series::DiscreteHolomorphic, 1.0, 0.0, Delta::Plus),
        mk(Series::DiscreteHolomorphic, 2.0, 0.0, Delta::Plus),
        mk(Series::DiscreteHolomorphic, 5.0, 0.0, Delta::Plus),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            models: default_models(),
            m_grid: vec![0.5, 1.0, 2.7, -1.3],
            n_grid: (2..=200).collect(),
            orders: vec![0.0, 1.0, 2.0],
            truncation: 500,
            tol: 1e-9,
            annihilation_tol: 1e-10,
            seed: 0,
            samples: 20,
            radius: 60,
            sweeps: SweepKind::ALL.to_vec(),
            out: PathBuf::from("."),
        }
    }
}

fn items(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

fn parse_one<T: FromStr>(item: &str, what: &str) -> Result<T, String> {
    item.parse().map_err(|_| format!("invalid {what} '{item}'"))
}

fn parse_list<T: FromStr>(value: &str, what: &str) -> Result<Vec<T>, String> {
    items(value).map(|s| parse_one(s, what)).collect()
}

/// `a`, `a..b` or `a..b:step`, inclusive.
fn parse_n_grid(value: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((lo, rest)) = item.split_once("..") else {
            out.push(parse_one(item, "index")?);
            continue;
        };
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, parse_one::<i64>(step.trim(), "step")?),
            None => (rest, 1),
        };
        let lo: i64 = parse_one(lo.trim(), "index")?;
        let hi: i64 = parse_one(hi.trim(), "index")?;
        if step <= 0 {
            return Err(format!("step must be positive in '{item}'"));
        }
        if lo > hi {
            return Err(format!("empty range '{item}'"));
        }
        out.extend((lo..=hi).step_by(step as usize));
    }
    Ok(out)
}

/// `series nu [delta] [gap]`; delta defaults to `-` for antiholomorphic and `+` otherwise.
pub fn parse_model(value: &str) -> Result<RepParams, String> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if !(2..=4).contains(&tokens.len()) {
        return Err(format!(
            "model needs 'series nu [delta] [gap]', got '{value}'"
        ));
    }
    let series: Series = tokens[0].parse().map_err(|e| format!("{e}"))?;
    let nu: Complex64 = parse_one(tokens[1], "nu")?;
    let delta = match tokens.get(2) {
        Some(d) => d.parse().map_err(|e| format!("{e}"))?,
        None if series == Series::DiscreteAntiholomorphic => Delta::Minus,
        None => Delta::Plus,
    };
    let gap = match tokens.get(3) {
        Some(g) => parse_one(g, "gap")?,
        None => DEFAULT_GAP,
    };
    make_params(series, nu, delta, gap).map_err(|e| format!("{e}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        let mut models = None::<Vec<RepParams>>;
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| format!("line {}: {msg}", lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if key == "model" {
                models
                    .get_or_insert_with(Vec::new)
                    .push(parse_model(value).map_err(at)?);
                continue;
            }
            if seen.contains(&key) {
                return Err(at(format!("duplicate key '{key}'")));
            }
            seen.push(key.clone());
            let scalar = |what: &str| -> Result<&str, String> {
                let mut it = items(value);
                match (it.next(), it.next()) {
                    (Some(v), None) => Ok(v),
                    _ => Err(format!("'{what}' takes exactly one value")),
                }
            };
            match key.as_str() {
                "models" => {
                    // `models =` with nothing clears the default list
                    if !value.is_empty() {
                        return Err(at("use repeated 'model = ...' lines".into()));
                    }
                    models.get_or_insert_with(Vec::new);
                }
                "m" => cfg.m_grid = parse_list(value, "twist").map_err(at)?,
                "n" => cfg.n_grid = parse_n_grid(value).map_err(at)?,
                "orders" => cfg.orders = parse_list(value, "order").map_err(at)?,
                "truncation" => {
                    cfg.truncation =
                        parse_one(scalar(&key).map_err(at)?, "truncation").map_err(at)?
                }
                "tol" => cfg.tol = parse_one(scalar(&key).map_err(at)?, "tolerance").map_err(at)?,
                "annihilation_tol" => {
                    cfg.annihilation_tol =
                        parse_one(scalar(&key).map_err(at)?, "tolerance").map_err(at)?
                }
                "seed" => cfg.seed = parse_one(scalar(&key).map_err(at)?, "seed").map_err(at)?,
                "samples" => {
                    cfg.samples =
                        parse_one(scalar(&key).map_err(at)?, "sample count").map_err(at)?
                }
                "radius" => {
                    cfg.radius = parse_one(scalar(&key).map_err(at)?, "radius").map_err(at)?
                }
                "sweeps" => cfg.sweeps = parse_list(value, "sweep").map_err(at)?,
                "out" => cfg.out = PathBuf::from(value),
                other => return Err(at(format!("unknown key '{other}'"))),
            }
        }
        if let Some(models) = models {
            cfg.models = models;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Input(msg));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if !(self.annihilation_tol > 0.0 && self.annihilation_tol.is_finite()) {
            return bad(format!(
                "annihilation tolerance must be positive, got {}",
                self.annihilation_tol
            ));
        }
        if self.truncation <= 0 {
            return bad(format!(
                "truncation must be positive, got {}",
                self.truncation
            ));
        }
        if self.radius < 0 {
            return bad(format!("radius must be non-negative, got {}", self.radius));
        }
        if let Some(m) = self.m_grid.iter().find(|m| !m.is_finite()) {
            return bad(format!("twist must be finite, got {m}"));
        }
        for &t in &self.orders {
            SobolevOrder::new(t)?;
        }
        Ok(())
    }

    /// Rejects `m = 0` for commands that solve the twisted equation.
    pub fn require_twisted(&self) -> Result<(), CliError> {
        if self.m_grid.contains(&0.0) {
            return Err(CliError::Input(
                "m = 0 is the untwisted equation and is not handled by this command".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg = RunConfig::parse(
            "model = principal 2i -\nmodel = holomorphic 5 # comment\nm = 0.5, -1.3\nn = 4, 10..14:2\n\
             orders = 0 1\ntruncation = 250\ntol = 1e-8\nseed = 9\nsweeps = growth\nout = x/y\n",
        )
        .unwrap();
        assert_eq!(cfg.models.len(), 2);
        assert_eq!(cfg.models[0].delta(), Delta::Minus);
        assert_eq!(cfg.m_grid, vec![0.5, -1.3]);
        assert_eq!(cfg.n_grid, vec![4, 10, 12, 14]);
        assert_eq!(cfg.orders, vec![0.0, 1.0]);
        assert_eq!(cfg.truncation, 250);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sweeps, vec![SweepKind::Growth]);
        assert_eq!(cfg.out, PathBuf::from("x/y"));
    }

    #[test]
    fn antiholomorphic_defaults_to_minus() {
        let p = parse_model("antiholomorphic -3").unwrap();
        assert_eq!(p.delta(), Delta::Minus);
    }

    #[test]
    fn empty_lists_are_allowed() {
        let cfg = RunConfig::parse("m =\nmodels =\n").unwrap();
        assert!(cfg.m_grid.is_empty());
        assert!(cfg.models.is_empty());
    }

    #[test]
    fn errors_name_the_line() {
        let e = RunConfig::parse("m = 1\nbogus = 2\n").unwrap_err();
        assert!(e.starts_with("line 2:"), "{e}");
        let e = RunConfig::parse("model = principal 0.5\n").unwrap_err();
        assert!(e.starts_with("line 1:"), "{e}");
        assert!(RunConfig::parse("m = 1\nm = 2\n")
            .unwrap_err()
            .contains("duplicate"));
        assert!(RunConfig::parse("n = 5..1\n").is_err());
        assert!(RunConfig::parse("tol = 1 2\n").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            m_grid: vec![1.0, 0.0],
            ..RunConfig::default()
        };
        assert!(cfg.require_twisted().is_err());
    }
}
