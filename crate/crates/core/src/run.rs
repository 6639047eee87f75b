//! Experiment orchestration behind the `volterra` binary.

use std::io::Write;

use crate::basis::BasisSet;
use crate::config::{DeterministicSource, Mode, RunConfig};
use crate::error::Result;
use crate::galerkin::{DeterministicProblem, ScalarField, SolutionSurface};
use crate::resolvent::{analytic_solution, gaussian_profile, ResolventKind};
use crate::stochastic::{
    sample_trajectory, spectral_mc, write_spectral_csv, NoiseSpec, SpectralModel,
    StochasticConvolution,
};
use crate::validate;

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// False only when validation checks failed.
    pub passed: bool,
    pub rows: usize,
}

fn solve_deterministic(cfg: &RunConfig, kind: ResolventKind) -> Result<SolutionSurface> {
    DeterministicProblem {
        kernel: kind.kernel(),
        basis: BasisSet::new(cfg.n, cfg.horizon)?,
        grid: cfg.grid()?,
        solver: cfg.solver,
    }
    .solve(gaussian_profile)
}

fn csv_rows(buf: &[u8]) -> usize {
    buf.iter().filter(|&&b| b == b'\n').count().saturating_sub(1)
}

/// Runs `cfg.mode`, writing its CSV to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<RunOutcome> {
    let kind = ResolventKind::from_alpha(cfg.alpha)?;
    let mut buf = Vec::new();
    let mut passed = true;
    match cfg.mode {
        Mode::Deterministic => {
            let surface = solve_deterministic(cfg, kind)?;
            surface.write_csv(&cfg.output_times, &mut buf)?;
        }
        Mode::Error => {
            let surface = solve_deterministic(cfg, kind)?;
            let field = surface.error_field(|t, x| analytic_solution(kind, t, x), cfg.horizon)?;
            field.write_csv(&mut buf, "error")?;
        }
        Mode::Stochastic => {
            let grid = cfg.grid()?;
            let deterministic: Vec<ScalarField> = match cfg.source {
                DeterministicSource::Galerkin => {
                    let surface = solve_deterministic(cfg, kind)?;
                    cfg.output_times
                        .iter()
                        .map(|&t| surface.evaluate(t))
                        .collect::<Result<_>>()?
                }
                DeterministicSource::Analytic => {
                    let xs = grid.points();
                    cfg.output_times
                        .iter()
                        .map(|&t| ScalarField {
                            t,
                            x: xs.clone(),
                            values: xs.iter().map(|&x| analytic_solution(kind, t, x)).collect(),
                        })
                        .collect()
                }
            };
            let noise = NoiseSpec::new(cfg.strength, cfg.steps, cfg.horizon, cfg.seed)?;
            let conv = StochasticConvolution::new(kind, noise);
            let path = sample_trajectory(&conv, deterministic)?;
            path.write_csv(&mut buf)?;
        }
        Mode::Spectral => {
            let model = SpectralModel::dirichlet(cfg.modes, kind.kernel());
            let rows = spectral_mc(&model, cfg.horizon, cfg.n_paths, cfg.seed, cfg.steps)?;
            write_spectral_csv(&rows, &mut buf)?;
        }
        Mode::Validate => {
            let checks = validate::run_all(cfg.seed);
            validate::write_csv(&checks, &mut buf)?;
            passed = checks.iter().all(|c| c.passed);
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(RunOutcome {
        passed,
        rows: csv_rows(&buf),
    })
}
