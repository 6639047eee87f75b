//! Sampling of the stochastic convolution `W_S(t) = ∫_0^t S(t - s) dW(s)` for
//! separable noise `W(t, x) = W_1(t) W_2(x)` on a uniform time grid
//! `s_i = i·τ`, `τ = T / I`:
//!
//! ```text
//! W_S(t, x) ≈ C τ^{1/2} Σ_{s_i < t} ζ_i (S(t - s_i) W_2)(x)
//! ```
//!
//! with `ζ_i` independent standard normals. For the Gaussian profile
//! `W_2(x) = e^{-x²/4}` the resolvent action has closed forms:
//!
//! * heat: `exp(-x² / (4(1 + t - s_i))) / sqrt(1 + t - s_i)`
//! * wave: `½ [exp(-(x - (t - s_i))²/4) + exp(-(x + (t - s_i))²/4)]`
//!
//! Note the heat factor uses `1 + t - s_i`: it is what the Gaussian
//! convolution produces, and [`StochasticConvolution::generic`] evaluates
//! the same sum by quadrature as an independent check.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::basis::Quadrature;
use crate::error::{Result, VolterraError};
use crate::galerkin::ScalarField;
use crate::kernels::{relaxation_closed, relaxation_numeric, KernelSpec, RelaxationTable};
use crate::resolvent::{gaussian_profile, Resolvent, ResolventKind};

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Default number of noise steps on `[0, T]`.
pub const DEFAULT_STEPS: usize = 600;

/// Asymptotic Kolmogorov-Smirnov critical value at the 1% level, times sqrt(n).
pub const KS_CRITICAL_1PCT: f64 = 1.6276;

/// Standard normal variates from the polar (Marsaglia) transform over
/// ChaCha8, seeded with `seed` and positioned on stream `stream`.
///
/// Each independent path uses its own stream number, so results do not
/// depend on how paths are scheduled across threads.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on (-1, 1) with 53 random bits.
    fn symmetric_uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (2.0 / (1u64 << 53) as f64) - 1.0
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.symmetric_uniform();
            let v = self.symmetric_uniform();
            let r2 = u * u + v * v;
            if r2 > 0.0 && r2 < 1.0 {
                let f = (-2.0 * r2.ln() / r2).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn take(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_normal()).collect()
    }
}

/// `count` standard normals from stream 0 of `seed`.
pub fn normal_stream(seed: u64, count: usize) -> Vec<f64> {
    NormalStream::new(seed, 0).take(count)
}

/// Spatial factor `W_2` of the separable noise.
#[derive(Clone, Default)]
pub enum SpatialProfile {
    /// `e^{-x²/4}`; the only profile with closed-form samplers.
    #[default]
    Gaussian,
    Zero,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SpatialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpatialProfile::Gaussian => gaussian_profile(x),
            SpatialProfile::Zero => 0.0,
            SpatialProfile::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for SpatialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialProfile::Gaussian => f.write_str("Gaussian"),
            SpatialProfile::Zero => f.write_str("Zero"),
            SpatialProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Noise strength, time grid and seed.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub strength: f64,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    pub profile: SpatialProfile,
}

impl NoiseSpec {
    pub fn new(strength: f64, steps: usize, horizon: f64, seed: u64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(VolterraError::domain(format!("noise strength must be >= 0, got {strength}")));
        }
        if steps == 0 {
            return Err(VolterraError::domain("noise steps must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(VolterraError::domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            strength,
            steps,
            horizon,
            seed,
            profile: SpatialProfile::Gaussian,
        })
    }

    pub fn with_profile(mut self, profile: SpatialProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    /// Time step `τ = T / I`.
    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// The grid index of `t`, which must be a multiple of `τ` in `[0, T]`.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let pos = t / self.tau();
        let idx = pos.round();
        if !(idx >= 0.0 && idx <= self.steps as f64) || (pos - idx).abs() > 1e-9 * pos.abs().max(1.0) {
            return Err(VolterraError::domain(format!(
                "time {t} is not on the noise grid (tau = {}, T = {})",
                self.tau(),
                self.horizon
            )));
        }
        Ok(idx as usize)
    }

    /// The ζ sequence for this noise seed.
    pub fn zeta(&self) -> Vec<f64> {
        normal_stream(self.seed, self.steps)
    }
}

fn heat_factor(lag: f64, x: f64) -> f64 {
    let s = 1.0 + lag;
    (-x * x / (4.0 * s)).exp() / s.sqrt()
}

fn wave_factor(lag: f64, x: f64) -> f64 {
    0.5 * (gaussian_profile(x - lag) + gaussian_profile(x + lag))
}

/// Evaluator for one resolvent family and noise specification.
#[derive(Debug, Clone)]
pub struct StochasticConvolution {
    kind: ResolventKind,
    noise: NoiseSpec,
    resolvent: Resolvent,
}

impl StochasticConvolution {
    pub fn new(kind: ResolventKind, noise: NoiseSpec) -> Self {
        Self {
            kind,
            noise,
            resolvent: Resolvent::new(kind),
        }
    }

    pub fn kind(&self) -> ResolventKind {
        self.kind
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    fn lags(&self, t: f64) -> Result<impl Iterator<Item = f64>> {
        let idx = self.noise.grid_index(t)?;
        let tau = self.noise.tau();
        // Use the grid value of t so lags are exact multiples of τ.
        let t_grid = idx as f64 * tau;
        Ok((0..idx).map(move |i| t_grid - i as f64 * tau))
    }

    fn check_zeta(&self, t: f64, zeta: &[f64]) -> Result<usize> {
        let idx = self.noise.grid_index(t)?;
        if zeta.len() < idx {
            return Err(VolterraError::domain(format!(
                "need at least {idx} noise values, got {}",
                zeta.len()
            )));
        }
        Ok(idx)
    }

    /// Per-step factors `(S(t - s_i) W_2)(x)` from the closed forms.
    pub fn closed_factors(&self, t: f64, x: f64) -> Result<Vec<f64>> {
        if !matches!(self.noise.profile, SpatialProfile::Gaussian) {
            return Err(VolterraError::domain(
                "closed-form samplers require the Gaussian spatial profile",
            ));
        }
        let f = match self.kind {
            ResolventKind::Heat => heat_factor,
            ResolventKind::Wave => wave_factor,
        };
        Ok(self.lags(t)?.map(|lag| f(lag, x)).collect())
    }

    /// Per-step factors computed by applying the resolvent to `W_2` directly.
    pub fn generic_factors(&self, t: f64, x: f64) -> Result<Vec<f64>> {
        let profile = &self.noise.profile;
        self.lags(t)?
            .map(|lag| self.resolvent.apply(lag, |y| profile.eval(y), x))
            .collect()
    }

    fn combine(&self, factors: &[f64], zeta: &[f64]) -> f64 {
        let sum: f64 = factors.iter().zip(zeta).map(|(f, z)| f * z).sum();
        self.noise.strength * self.noise.tau().sqrt() * sum
    }

    /// Closed-form sampler.
    pub fn closed_form(&self, t: f64, x: f64, zeta: &[f64]) -> Result<f64> {
        self.check_zeta(t, zeta)?;
        Ok(self.combine(&self.closed_factors(t, x)?, zeta))
    }

    /// Quadrature / translation sampler used to validate the closed forms.
    pub fn generic(&self, t: f64, x: f64, zeta: &[f64]) -> Result<f64> {
        self.check_zeta(t, zeta)?;
        Ok(self.combine(&self.generic_factors(t, x)?, zeta))
    }

    /// `Var W_S(t, x) = C² τ Σ f_i²` for the discretized sum.
    pub fn variance(&self, t: f64, x: f64) -> Result<f64> {
        let f = self.closed_factors(t, x)?;
        let c = self.noise.strength;
        Ok(c * c * self.noise.tau() * f.iter().map(|v| v * v).sum::<f64>())
    }

    /// Convolution on a set of points for one ζ sequence.
    pub fn field(&self, t: f64, xs: &[f64], zeta: &[f64]) -> Result<ScalarField> {
        let values = match self.noise.profile {
            SpatialProfile::Gaussian => xs
                .iter()
                .map(|&x| self.closed_form(t, x, zeta))
                .collect::<Result<Vec<_>>>()?,
            _ => xs
                .iter()
                .map(|&x| self.generic(t, x, zeta))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(ScalarField {
            t,
            x: xs.to_vec(),
            values,
        })
    }

    /// Independent draws of `W_S(t, x)`; path `p` uses stream `p` of `seed`.
    pub fn point_samples(&self, t: f64, x: f64, paths: usize, seed: u64) -> Result<Vec<f64>> {
        let idx = self.noise.grid_index(t)?;
        let factors = match self.noise.profile {
            SpatialProfile::Gaussian => self.closed_factors(t, x)?,
            _ => self.generic_factors(t, x)?,
        };
        Ok((0..paths)
            .into_par_iter()
            .map(|p| {
                let zeta = NormalStream::new(seed, p as u64).take(idx);
                self.combine(&factors, &zeta)
            })
            .collect())
    }
}

/// Closed-form heat sampler.
pub fn stoch_conv_heat(noise: &NoiseSpec, t: f64, x: f64, zeta: &[f64]) -> Result<f64> {
    StochasticConvolution::new(ResolventKind::Heat, noise.clone()).closed_form(t, x, zeta)
}

/// Closed-form wave sampler.
pub fn stoch_conv_wave(noise: &NoiseSpec, t: f64, x: f64, zeta: &[f64]) -> Result<f64> {
    StochasticConvolution::new(ResolventKind::Wave, noise.clone()).closed_form(t, x, zeta)
}

/// Quadrature (heat) or translation (wave) sampler.
pub fn stoch_conv_generic(
    kind: ResolventKind,
    noise: &NoiseSpec,
    t: f64,
    x: f64,
    zeta: &[f64],
) -> Result<f64> {
    StochasticConvolution::new(kind, noise.clone()).generic(t, x, zeta)
}

/// One trajectory of the mild solution, kept as its two parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub seed: u64,
    pub deterministic: Vec<ScalarField>,
    pub convolution: Vec<ScalarField>,
}

impl SamplePath {
    pub fn times(&self) -> Vec<f64> {
        self.deterministic.iter().map(|f| f.t).collect()
    }

    /// Deterministic part plus convolution at output index `i`.
    pub fn total(&self, i: usize) -> ScalarField {
        let d = &self.deterministic[i];
        let c = &self.convolution[i];
        ScalarField {
            t: d.t,
            x: d.x.clone(),
            values: d.values.iter().zip(&c.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "seed,t,x,deterministic,convolution,total")?;
        for (d, c) in self.deterministic.iter().zip(&self.convolution) {
            for ((x, dv), cv) in d.x.iter().zip(&d.values).zip(&c.values) {
                writeln!(out, "{},{},{x},{dv},{},{}", self.seed, d.t, cv + 0.0, dv + cv)?;
            }
        }
        Ok(())
    }
}

/// Adds one convolution sample (from the noise seed) to precomputed
/// deterministic fields. The output times are those of the fields.
pub fn sample_trajectory(
    conv: &StochasticConvolution,
    deterministic: Vec<ScalarField>,
) -> Result<SamplePath> {
    let zeta = conv.noise().zeta();
    let convolution = deterministic
        .par_iter()
        .map(|d| conv.field(d.t, &d.x, &zeta))
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePath {
        seed: conv.noise().seed,
        deterministic,
        convolution,
    })
}

/// Sample mean and unbiased variance, summed in index order.
pub fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sup distance between the empirical CDF of `samples / sd` and Φ.
pub fn ks_normal_distance(samples: &[f64], sd: f64) -> f64 {
    let mut z: Vec<f64> = samples.iter().map(|v| v / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 0.5 * (1.0 + erf(v / std::f64::consts::SQRT_2));
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Eigenmodes `A e_k = -μ_k e_k` and a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub eigenvalues: Vec<f64>,
    pub kernel: KernelSpec,
}

impl SpectralModel {
    /// `μ_k = k²`, k = 1..=K.
    pub fn dirichlet(modes: usize, kernel: KernelSpec) -> Self {
        Self {
            eigenvalues: (1..=modes).map(|k| (k * k) as f64).collect(),
            kernel,
        }
    }

    /// Partial sums of `Σ 1/μ_k`.
    pub fn trace_partial_sums(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .scan(0.0, |acc, mu| {
                *acc += 1.0 / mu;
                Some(*acc)
            })
            .collect()
    }
}

/// Monte Carlo estimate for one eigenmode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEstimate {
    pub k: usize,
    pub mu: f64,
    /// `∫_0^t s²(μ_k, τ) dτ`.
    pub target_variance: f64,
    pub sample_variance: f64,
    pub n_paths: usize,
    pub steps: usize,
}

impl ModeEstimate {
    /// Standard error of the sample variance of a Gaussian.
    pub fn standard_error(&self) -> f64 {
        (2.0 / self.n_paths as f64).sqrt() * self.target_variance
    }
}

pub fn write_spectral_csv<W: Write>(rows: &[ModeEstimate], mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,mu_k,target_variance,sample_variance,n_paths")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.k, r.mu, r.target_variance, r.sample_variance, r.n_paths
        )?;
    }
    Ok(())
}

enum Relaxation {
    Closed(KernelSpec, f64),
    Table(RelaxationTable),
}

impl Relaxation {
    fn new(kernel: &KernelSpec, mu: f64, t: f64, resolution: usize) -> Result<Self> {
        match relaxation_closed(kernel, mu, 0.0) {
            Ok(_) => Ok(Relaxation::Closed(*kernel, mu)),
            Err(VolterraError::UnsupportedClosedForm(_)) => {
                let count = resolution.max(1);
                let step = t / count as f64;
                Ok(Relaxation::Table(relaxation_numeric(kernel, mu, step, count)?))
            }
            Err(e) => Err(e),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        match self {
            Relaxation::Closed(k, mu) => relaxation_closed(k, *mu, u).unwrap_or(f64::NAN),
            Relaxation::Table(tbl) => tbl.interpolate(u),
        }
    }
}

/// Cells per unit `μ t` used for both the target quadrature and the
/// per-mode time grid.
const CELLS_PER_DECAY: f64 = 4.0;

/// Cap on the product-trapezoidal table length (its cost is quadratic).
const MAX_TABLE_STEPS: usize = 16_000;

/// Simulates `ξ_k = ∫_0^t s(μ_k, t - r) dβ_k(r)` for each mode as a
/// midpoint-weighted Gaussian sum over `max(base_steps, 4 μ_k t)` cells and
/// returns sample variances next to `∫_0^t s²(μ_k, τ) dτ`.
///
/// Mode `k` path `p` draws from stream `(k << 32) | p` of `seed`.
pub fn spectral_mc(
    model: &SpectralModel,
    t: f64,
    n_paths: usize,
    seed: u64,
    base_steps: usize,
) -> Result<Vec<ModeEstimate>> {
    if !(t > 0.0) {
        return Err(VolterraError::domain(format!("spectral time must be positive, got {t}")));
    }
    if n_paths < 2 {
        return Err(VolterraError::domain("need at least two paths for a variance"));
    }
    let panel_rule = Quadrature::gauss_legendre(16)?;
    model
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(idx, &mu)| {
            let steps = base_steps.max((CELLS_PER_DECAY * mu * t).ceil() as usize).max(1);
            let relax = Relaxation::new(&model.kernel, mu, t, (8 * steps).min(MAX_TABLE_STEPS))?;
            let panels = steps;
            let width = t / panels as f64;
            let target: f64 = (0..panels)
                .map(|p| {
                    let a = p as f64 * width;
                    panel_rule.integrate(a, a + width, |u| relax.eval(u).powi(2))
                })
                .sum();

            let tau = t / steps as f64;
            let sqrt_tau = tau.sqrt();
            let weights: Vec<f64> = (0..steps)
                .map(|i| relax.eval(t - (i as f64 + 0.5) * tau) * sqrt_tau)
                .collect();
            let samples: Vec<f64> = (0..n_paths)
                .into_par_iter()
                .map(|p| {
                    let mut normals = NormalStream::new(seed, ((idx as u64) << 32) | p as u64);
                    weights.iter().map(|w| w * normals.next_normal()).sum()
                })
                .collect();
            let (_, var) = mean_and_variance(&samples);
            Ok(ModeEstimate {
                k: idx + 1,
                mu,
                target_variance: target,
                sample_variance: var,
                n_paths,
                steps,
            })
        })
        .collect()
}
