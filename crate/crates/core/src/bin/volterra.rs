use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use volterra::{parse_config, run, Mode, VolterraError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Deterministic,
    Error,
    Stochastic,
    Spectral,
    Validate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Deterministic => Mode::Deterministic,
            ModeArg::Error => Mode::Error,
            ModeArg::Stochastic => Mode::Stochastic,
            ModeArg::Spectral => Mode::Spectral,
            ModeArg::Validate => Mode::Validate,
        }
    }
}

/// Galerkin and stochastic-convolution solvers for Volterra equations.
#[derive(Debug, Parser)]
#[command(name = "volterra", version)]
struct Cli {
    #[arg(value_enum)]
    mode: ModeArg,
    /// Flat key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1 = heat kernel a ≡ 1, 2 = wave kernel a(t) = t.
    #[arg(long)]
    alpha: Option<String>,
    /// Number of temporal basis functions.
    #[arg(long)]
    n: Option<String>,
    /// Number of space intervals.
    #[arg(long)]
    m: Option<String>,
    /// Space step; must equal (x_max - x_min)/m.
    #[arg(long)]
    h: Option<String>,
    #[arg(long = "x-min", allow_hyphen_values = true)]
    x_min: Option<String>,
    #[arg(long = "x-max", allow_hyphen_values = true)]
    x_max: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Noise strength.
    #[arg(long = "C")]
    strength: Option<String>,
    /// Noise time steps on [0, T].
    #[arg(long = "I")]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Count of uniform output times, or a comma-separated list.
    #[arg(long = "output-times")]
    output_times: Option<String>,
    /// galerkin | analytic (stochastic mode).
    #[arg(long)]
    source: Option<String>,
    /// dense | kronecker.
    #[arg(long)]
    solver: Option<String>,
    /// Eigenmodes in spectral mode.
    #[arg(long)]
    modes: Option<String>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<String>,
}

impl Cli {
    fn overrides(&self) -> BTreeMap<String, String> {
        [
            ("alpha", &self.alpha),
            ("n", &self.n),
            ("m", &self.m),
            ("h", &self.h),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
            ("T", &self.horizon),
            ("C", &self.strength),
            ("I", &self.steps),
            ("seed", &self.seed),
            ("paths", &self.paths),
            ("output_times", &self.output_times),
            ("source", &self.source),
            ("solver", &self.solver),
            ("modes", &self.modes),
            ("out", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn report(err: &VolterraError) {
    let detail = match err {
        VolterraError::Config { key, .. } => format!(" key={key}"),
        VolterraError::Unstable { step, .. } => format!(" step={step}"),
        VolterraError::Singular { row, condition, .. } => format!(" row={row} condition={condition:e}"),
        _ => String::new(),
    };
    eprintln!("error kind={}{detail} message=\"{err}\"", err.kind());
}

fn execute(cli: &Cli) -> Result<bool, VolterraError> {
    let file = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            VolterraError::config("config", format!("cannot read {}: {e}", path.display()))
        })?),
        None => None,
    };
    let cfg = parse_config(cli.mode.into(), file.as_deref(), &cli.overrides())?;
    let outcome = match &cfg.output_path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let o = run(&cfg, &mut w)?;
            w.flush()?;
            o
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            run(&cfg, &mut lock)?
        }
    };
    if !outcome.passed {
        eprintln!("error kind=validation message=\"one or more checks failed\"");
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report(&e);
            ExitCode::from(2)
        }
    }
}
