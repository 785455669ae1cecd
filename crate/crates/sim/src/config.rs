//! Flat `key = value` run configuration.
//!
//! Resolution order: built-in defaults, then the config file, then explicit
//! flags. Every key is listed in [`KEYS`]; anything else is rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fpp_core::distributions::DegreePmf;
use fpp_core::weights::{GridCdf, WeightLaw};
use thiserror::Error;

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "FPP_OUT_DIR";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("config file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl ToString) -> Self {
        Self::Invalid { key: key.to_string(), reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub unit: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, unit: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default, unit, help }
}

pub const KEYS: &[KeySpec] = &[
    key("n", Some("100000"), "vertices", "graph size; experiments accept a comma-separated grid"),
    key("tau", None, "exponent", "power-law exponent, in (2, 3)"),
    key("k_min", Some("2"), "degree", "smallest degree of the degree law"),
    key("degree.kind", Some("zipf"), "name", "degree law: zipf | pareto"),
    key("weight.kind", Some("exp"), "name", "edge weights: exp | one-plus-uniform | one-plus-exp | grid"),
    key("weight.param", Some("1"), "rate or width", "rate for exp kinds, width for one-plus-uniform"),
    key("weight.grid", Some(""), "path", "CSV of (t, cdf) rows for weight.kind = grid"),
    key("p", Some("0.5"), "probability", "edge retention; percolate/giant accept a comma-separated grid"),
    key("rho0", Some("0.45"), "exponent", "first layer threshold is n^rho0"),
    key("rho", Some("1"), "exponent", "rho0 must lie below rho * (tau - 2)"),
    key("C", Some("1"), "factor", "multiplier of ln n in the threshold recursion"),
    key("b", Some("1"), "factor", "constant in the maximal-degree bound (n / (b ln n))^(1/(tau-1))"),
    key("seed", Some("1"), "integer", "base seed; job j uses seed + j"),
    key("pairs", Some("100"), "count", "vertex pairs (or sources) sampled per graph"),
    key("replicas", Some("20"), "count", "independent replicas (graphs, seed groups or process pairs)"),
    key("M", Some("10000"), "deaths", "deaths simulated per explosion-time estimate"),
    key("tol", Some("0.001"), "time", "convergence tolerance |V_M - V_{M/2}|"),
    key("eps", Some("0.1"), "length", "integration window (1 - eps, 1) of the explosion criterion"),
    key("offspring", Some("zipf-sb:2.5"), "law", "criterion offspring: zipf-sb:tau | zipf:tau | identity | poisson:lambda | power:a | point:k"),
    key("k_max", Some("6"), "hops", "largest neighbourhood radius in the coupling experiment"),
    key("experiment", Some("scaling"), "name", "scaling | explosive | hopcount | giant | coupling"),
    key("out", Some("fpp-out"), "path", "output directory (default taken from FPP_OUT_DIR when set)"),
];

pub fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, reason: format!("expected key=value, got `{line}`") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, overridden by `file` entries, overridden by `flags`.
    pub fn resolve(file: &[(String, String)], flags: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for k in KEYS {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            values.insert("out".into(), dir);
        }
        for (k, v) in file.iter().chain(flags) {
            if k == "weight" {
                let (kind, param) = parse_weight_shorthand(v)?;
                values.insert("weight.kind".into(), kind);
                values.insert("weight.param".into(), param);
                continue;
            }
            if spec(k).is_none() {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Result<&str, ConfigError> {
        self.values.get(key).map(String::as_str).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        raw.parse().map_err(|e: T::Err| ConfigError::invalid(key, format!("`{raw}`: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.parse(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.parse(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.parse(key)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| s.trim().parse().map_err(|e: T::Err| ConfigError::invalid(key, format!("`{s}`: {e}"))))
            .collect()
    }

    /// The single graph size; rejects grids.
    pub fn n(&self) -> Result<usize, ConfigError> {
        let grid = self.n_grid()?;
        match grid.as_slice() {
            [n] => Ok(*n),
            _ => Err(ConfigError::invalid("n", "expected a single value")),
        }
    }

    pub fn n_grid(&self) -> Result<Vec<usize>, ConfigError> {
        let grid: Vec<usize> = self.list("n")?;
        if let Some(bad) = grid.iter().find(|n| **n < 16) {
            return Err(ConfigError::invalid("n", format!("{bad} is below 16 (log log n must be positive)")));
        }
        Ok(grid)
    }

    pub fn p_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let grid: Vec<f64> = self.list("p")?;
        if let Some(bad) = grid.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(ConfigError::invalid("p", format!("{bad} is outside (0, 1]")));
        }
        Ok(grid)
    }

    pub fn degree_law(&self) -> Result<DegreePmf, ConfigError> {
        let tau = self.f64("tau")?;
        let k_min = self.u64("k_min")?;
        let law = match self.raw("degree.kind")? {
            "zipf" => DegreePmf::zipf(tau, k_min),
            "pareto" => DegreePmf::pareto_discretized(tau, k_min),
            other => return Err(ConfigError::invalid("degree.kind", format!("unknown kind `{other}`"))),
        };
        law.map_err(|e| ConfigError::invalid("tau", e))
    }

    pub fn weight_law(&self) -> Result<WeightLaw, ConfigError> {
        let param = self.f64("weight.param")?;
        let kind = self.raw("weight.kind")?;
        let law = match kind {
            "exp" => WeightLaw::exponential(param),
            "one-plus-uniform" => WeightLaw::one_plus_uniform(param),
            "one-plus-exp" => WeightLaw::one_plus_exponential(param),
            "grid" => {
                let path = self.raw("weight.grid")?;
                if path.is_empty() {
                    return Err(ConfigError::Missing("weight.grid".into()));
                }
                return read_grid_cdf(Path::new(path)).map(WeightLaw::Grid);
            }
            other => return Err(ConfigError::invalid("weight.kind", format!("unknown kind `{other}`"))),
        };
        law.map_err(|e| ConfigError::invalid("weight.param", e))
    }

    pub fn out_dir(&self) -> Result<PathBuf, ConfigError> {
        Ok(PathBuf::from(self.raw("out")?))
    }

    /// `key=value` lines, sorted by key.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// `exp:1`, `unif:1`, `1+unif:1`, `1+exp:2`, `grid`; the parameter defaults to 1.
pub fn parse_weight_shorthand(s: &str) -> Result<(String, String), ConfigError> {
    let (kind, param) = s.split_once(':').unwrap_or((s, "1"));
    let kind = match kind {
        "exp" => "exp",
        "unif" | "1+unif" | "one-plus-uniform" => "one-plus-uniform",
        "1+exp" | "one-plus-exp" => "one-plus-exp",
        "grid" => "grid",
        other => return Err(ConfigError::invalid("weight", format!("unknown kind `{other}`"))),
    };
    Ok((kind.to_string(), param.to_string()))
}

/// Reads `t,cdf` rows; a header line is allowed.
pub fn read_grid_cdf(path: &Path) -> Result<GridCdf, ConfigError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ConfigError::invalid("weight.grid", e))?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::invalid("weight.grid", e))?;
        let parsed: Option<(f64, f64)> = match (rec.get(0), rec.get(1)) {
            (Some(a), Some(b)) => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => points.push(p),
            None if i == 0 => continue,
            None => return Err(ConfigError::invalid("weight.grid", format!("row {} is not a (t, cdf) pair", i + 1))),
        }
    }
    GridCdf::new(&points).map_err(|e| ConfigError::invalid("weight.grid", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = parse_file("pairs = 7 # comment\nseed=3\n\n").unwrap();
        let cfg = RunConfig::resolve(&file, &flags(&[("seed", "9"), ("tau", "2.5")])).unwrap();
        assert_eq!(cfg.u64("pairs").unwrap(), 7);
        assert_eq!(cfg.u64("seed").unwrap(), 9);
        assert_eq!(cfg.usize("replicas").unwrap(), 20);
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert_eq!(
            RunConfig::resolve(&flags(&[("colour", "red")]), &[]).unwrap_err(),
            ConfigError::UnknownKey("colour".into())
        );
        let cfg = RunConfig::resolve(&[], &[]).unwrap();
        assert_eq!(cfg.f64("tau").unwrap_err(), ConfigError::Missing("tau".into()));
        assert!(parse_file("just words").is_err());
    }

    #[test]
    fn weight_shorthand() {
        let cfg = RunConfig::resolve(&[], &flags(&[("weight", "1+unif:2")])).unwrap();
        assert_eq!(cfg.weight_law().unwrap(), WeightLaw::one_plus_uniform(2.0).unwrap());
        let cfg = RunConfig::resolve(&[], &flags(&[("weight", "exp")])).unwrap();
        assert_eq!(cfg.weight_law().unwrap(), WeightLaw::exponential(1.0).unwrap());
        assert!(RunConfig::resolve(&[], &flags(&[("weight", "gamma:2")])).is_err());
    }

    #[test]
    fn grids_and_ranges() {
        let cfg = RunConfig::resolve(&[], &flags(&[("n", "10000, 100000"), ("p", "0.3,1")])).unwrap();
        assert_eq!(cfg.n_grid().unwrap(), vec![10_000, 100_000]);
        assert!(cfg.n().is_err());
        assert_eq!(cfg.p_grid().unwrap(), vec![0.3, 1.0]);
        let cfg = RunConfig::resolve(&[], &flags(&[("n", "8")])).unwrap();
        assert!(cfg.n_grid().is_err());
        let cfg = RunConfig::resolve(&[], &flags(&[("tau", "3.5")])).unwrap();
        assert!(matches!(cfg.degree_law(), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn grid_cdf_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cdf.csv");
        std::fs::write(&path, "t,cdf\n0,0\n0.5,0.4\n2,1\n").unwrap();
        let g = read_grid_cdf(&path).unwrap();
        assert!((g.cdf(0.25) - 0.2).abs() < 1e-15);
        std::fs::write(&path, "0,0\n1,0.5\n").unwrap();
        assert!(read_grid_cdf(&path).is_err());
    }

    #[test]
    fn every_key_is_documented() {
        for k in KEYS {
            assert!(!k.help.is_empty() && !k.unit.is_empty(), "{}", k.name);
        }
        let cfg = RunConfig::resolve(&[], &[]).unwrap();
        assert!(cfg.echo().lines().all(|l| l.contains('=')));
    }
}
