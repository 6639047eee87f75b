//! Run configuration: flat `key = value` files overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Result, VolterraError};
use crate::galerkin::{SolverKind, SpaceGrid};
use crate::stochastic::{DEFAULT_SEED, DEFAULT_STEPS};

/// What a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Error,
    Stochastic,
    Spectral,
    Validate,
}

impl FromStr for Mode {
    type Err = VolterraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Mode::Deterministic),
            "error" => Ok(Mode::Error),
            "stochastic" => Ok(Mode::Stochastic),
            "spectral" => Ok(Mode::Spectral),
            "validate" => Ok(Mode::Validate),
            other => Err(VolterraError::config("mode", format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Deterministic => "deterministic",
            Mode::Error => "error",
            Mode::Stochastic => "stochastic",
            Mode::Spectral => "spectral",
            Mode::Validate => "validate",
        })
    }
}

/// Where the deterministic part of a stochastic trajectory comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeterministicSource {
    #[default]
    Galerkin,
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha: u32,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub horizon: f64,
    pub strength: f64,
    pub steps: usize,
    pub seed: u64,
    pub n_paths: usize,
    pub output_times: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub source: DeterministicSource,
    pub solver: SolverKind,
    /// Number of eigenmodes in spectral mode.
    pub modes: usize,
}

pub const DEFAULT_OUTPUT_TIMES: usize = 61;
pub const DEFAULT_PATHS: usize = 1000;
pub const DEFAULT_MODES: usize = 100;

/// Keys accepted in config files and as flags.
pub const KEYS: &[&str] = &[
    "alpha", "n", "m", "h", "x_min", "x_max", "T", "C", "I", "seed", "paths", "output_times",
    "out", "source", "solver", "modes",
];

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            alpha: 1,
            n: 8,
            m: 150,
            h: 0.2,
            x_min: -15.0,
            x_max: 15.0,
            horizon: 6.0,
            strength: 0.1,
            steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
            n_paths: DEFAULT_PATHS,
            output_times: uniform_times(6.0, DEFAULT_OUTPUT_TIMES),
            output_path: None,
            source: DeterministicSource::Galerkin,
            solver: SolverKind::Dense,
            modes: DEFAULT_MODES,
        }
    }

    pub fn grid(&self) -> Result<SpaceGrid> {
        SpaceGrid::new(self.x_min, self.x_max, self.m)
    }

    fn validate(&self) -> Result<()> {
        if self.alpha != 1 && self.alpha != 2 {
            return Err(VolterraError::config("alpha", "alpha must be 1 or 2"));
        }
        if self.n == 0 {
            return Err(VolterraError::config("n", "n must be positive"));
        }
        if self.m < 3 {
            return Err(VolterraError::config("m", "m must be at least 3"));
        }
        if !(self.h > 0.0) {
            return Err(VolterraError::config("h", "h must be positive"));
        }
        if !(self.x_max > self.x_min) {
            return Err(VolterraError::config("x_max", "x_max must exceed x_min"));
        }
        let spacing = (self.x_max - self.x_min) / self.m as f64;
        if (spacing - self.h).abs() > 1e-9 * self.h {
            return Err(VolterraError::config(
                "h",
                format!(
                    "(x_max - x_min)/m = {spacing} does not match h = {}",
                    self.h
                ),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(VolterraError::config("T", "T must be positive"));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(VolterraError::config("C", "C must be nonnegative"));
        }
        if self.steps == 0 {
            return Err(VolterraError::config("I", "I must be positive"));
        }
        if self.n_paths < 2 {
            return Err(VolterraError::config("paths", "paths must be at least 2"));
        }
        if self.modes == 0 {
            return Err(VolterraError::config("modes", "modes must be positive"));
        }
        if self.output_times.is_empty() {
            return Err(VolterraError::config("output_times", "no output times"));
        }
        if let Some(t) = self
            .output_times
            .iter()
            .find(|&&t| !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)))
        {
            return Err(VolterraError::config(
                "output_times",
                format!("time {t} outside [0, T]"),
            ));
        }
        Ok(())
    }
}

pub fn uniform_times(horizon: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![horizon],
        _ => (0..count)
            .map(|i| horizon * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            VolterraError::config(line, format!("line {} is not key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(VolterraError::config(key, "unknown key"));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        VolterraError::config(
            key,
            format!("cannot parse `{value}` as {}", std::any::type_name::<T>()),
        )
    })
}

/// Resolves a configuration from file contents and flag overrides.
///
/// `overrides` wins over `file`; everything unset keeps its default.
pub fn parse_config(
    mode: Mode,
    file: Option<&str>,
    overrides: &BTreeMap<String, String>,
) -> Result<RunConfig> {
    let mut merged = match file {
        Some(text) => parse_kv(text)?,
        None => BTreeMap::new(),
    };
    for (k, v) in overrides {
        if !KEYS.contains(&k.as_str()) {
            return Err(VolterraError::config(k.as_str(), "unknown key"));
        }
        merged.insert(k.clone(), v.clone());
    }

    let mut cfg = RunConfig::defaults(mode);
    let mut times_spec: Option<String> = None;
    for (key, value) in &merged {
        let v = value.as_str();
        match key.as_str() {
            "alpha" => cfg.alpha = parse_value(key, v)?,
            "n" => cfg.n = parse_value(key, v)?,
            "m" => cfg.m = parse_value(key, v)?,
            "h" => cfg.h = parse_value(key, v)?,
            "x_min" => cfg.x_min = parse_value(key, v)?,
            "x_max" => cfg.x_max = parse_value(key, v)?,
            "T" => cfg.horizon = parse_value(key, v)?,
            "C" => cfg.strength = parse_value(key, v)?,
            "I" => cfg.steps = parse_value(key, v)?,
            "seed" => cfg.seed = parse_value(key, v)?,
            "paths" => cfg.n_paths = parse_value(key, v)?,
            "modes" => cfg.modes = parse_value(key, v)?,
            "output_times" => times_spec = Some(v.to_string()),
            "out" => cfg.output_path = Some(PathBuf::from(v)),
            "source" => {
                cfg.source = match v {
                    "galerkin" => DeterministicSource::Galerkin,
                    "analytic" => DeterministicSource::Analytic,
                    _ => {
                        return Err(VolterraError::config(key, "expected `galerkin` or `analytic`"))
                    }
                }
            }
            "solver" => {
                cfg.solver = match v {
                    "dense" => SolverKind::Dense,
                    "kronecker" => SolverKind::Kronecker,
                    _ => return Err(VolterraError::config(key, "expected `dense` or `kronecker`")),
                }
            }
            _ => return Err(VolterraError::config(key.as_str(), "unknown key")),
        }
    }
    cfg.output_times = match times_spec {
        // A bare integer is a count of uniform times on [0, T].
        Some(spec) if !spec.contains(',') && !spec.contains('.') => {
            uniform_times(cfg.horizon, parse_value("output_times", &spec)?)
        }
        Some(spec) => spec
            .split(',')
            .map(|s| parse_value::<f64>("output_times", s.trim()))
            .collect::<Result<_>>()?,
        None => uniform_times(cfg.horizon, DEFAULT_OUTPUT_TIMES),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_input_gives_defaults() {
        let cfg = parse_config(Mode::Error, None, &BTreeMap::new()).unwrap();
        assert_eq!(cfg, RunConfig::defaults(Mode::Error));
        assert_eq!((cfg.n, cfg.m, cfg.h, cfg.x_min, cfg.x_max), (8, 150, 0.2, -15.0, 15.0));
        assert_eq!((cfg.horizon, cfg.strength), (6.0, 0.1));
        assert_eq!(cfg.output_times.len(), 61);
        assert!((cfg.output_times[1] - 0.1).abs() < 1e-15);
        assert_eq!(cfg.output_times[60], 6.0);
    }

    #[test]
    fn bad_alpha_rejected() {
        let err = parse_config(Mode::Error, None, &flags(&[("alpha", "3")])).unwrap_err();
        assert!(err.to_string().contains("alpha must be 1 or 2"));
        assert!(matches!(err, VolterraError::Config { ref key, .. } if key == "alpha"));
    }

    #[test]
    fn inconsistent_grid_rejected() {
        let file = "m = 150\nh = 0.2\nx_min = -10\nx_max = 10\n";
        let err = parse_config(Mode::Error, Some(file), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, VolterraError::Config { ref key, .. } if key == "h"));
    }

    #[test]
    fn flags_override_file() {
        let file = "# comment\nn = 4\nseed = 9\nC = 0.5 # trailing\n";
        let cfg = parse_config(Mode::Stochastic, Some(file), &flags(&[("n", "6")])).unwrap();
        assert_eq!(cfg.n, 6);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.strength, 0.5);
    }

    #[test]
    fn unknown_key_and_type_mismatch() {
        let err = parse_config(Mode::Error, Some("bogus = 1"), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, VolterraError::Config { ref key, .. } if key == "bogus"));
        let err = parse_config(Mode::Error, None, &flags(&[("n", "eight")])).unwrap_err();
        assert!(matches!(err, VolterraError::Config { ref key, .. } if key == "n"));
        let err = parse_config(Mode::Error, Some("no equals sign"), &BTreeMap::new()).unwrap_err();
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn output_time_forms() {
        let cfg = parse_config(Mode::Deterministic, None, &flags(&[("output_times", "4")])).unwrap();
        assert_eq!(cfg.output_times, vec![0.0, 2.0, 4.0, 6.0]);
        let cfg =
            parse_config(Mode::Deterministic, None, &flags(&[("output_times", "0.5, 1.5,6")])).unwrap();
        assert_eq!(cfg.output_times, vec![0.5, 1.5, 6.0]);
        assert!(parse_config(Mode::Deterministic, None, &flags(&[("output_times", "7.0")])).is_err());
    }

    #[test]
    fn refined_grid_needs_matching_spacing() {
        let cfg = parse_config(Mode::Error, None, &flags(&[("m", "300"), ("h", "0.1")])).unwrap();
        assert_eq!(cfg.grid().unwrap().m(), 300);
        assert!(parse_config(Mode::Error, None, &flags(&[("m", "300")])).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ["deterministic", "error", "stochastic", "spectral", "validate"] {
            assert_eq!(m.parse::<Mode>().unwrap().to_string(), m);
        }
        assert!("plot".parse::<Mode>().is_err());
    }
}
