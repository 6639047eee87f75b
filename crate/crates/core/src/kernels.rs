//! Memory kernels `a(t)` and their relaxation functions `s(t; γ)`, the
//! solutions of `s(t) + γ ∫_0^t a(t - τ) s(τ) dτ = 1`.

use std::io::Write;

use statrs::function::gamma::gamma;

use crate::error::{Result, VolterraError};

/// Divergence guard for the numeric relaxation solver.
pub const INSTABILITY_THRESHOLD: f64 = 1e6;

/// Default step of the product-trapezoidal solver.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Tolerance used when checking sampled relaxation tables for monotonicity and sign.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Convolution kernel of the Volterra equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `a(t) = 1` (heat equation).
    Constant,
    /// `a(t) = t` (wave equation).
    Linear,
    /// `a(t) = e^{-t}`.
    Exponential,
    /// `a(t) = t^(α-1) / Γ(α)`, `0 < α ≤ 2`.
    Power { alpha: f64 },
}

impl KernelSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(VolterraError::domain(format!(
                "power kernel exponent must lie in (0, 2], got {alpha}"
            )));
        }
        Ok(KernelSpec::Power { alpha })
    }

    /// Heat/wave interpolation kernel with the named exponent; integer
    /// exponents map onto the constant and linear kernels.
    pub fn interpolating(alpha: f64) -> Result<Self> {
        match alpha {
            a if a == 1.0 => Ok(KernelSpec::Constant),
            a if a == 2.0 => Ok(KernelSpec::Linear),
            a => Self::power(a),
        }
    }

    /// Exponent α if the kernel belongs to the `t^(α-1)/Γ(α)` family.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            KernelSpec::Constant => Some(1.0),
            KernelSpec::Linear => Some(2.0),
            KernelSpec::Power { alpha } => Some(alpha),
            KernelSpec::Exponential => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            KernelSpec::Constant => "constant".into(),
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Exponential => "exponential".into(),
            KernelSpec::Power { alpha } => format!("power(alpha={alpha})"),
        }
    }

    fn is_singular_at_zero(&self) -> bool {
        matches!(self.power_exponent(), Some(a) if a < 1.0)
    }

    /// Evaluates `a(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() || (t == 0.0 && self.is_singular_at_zero()) {
            return Err(VolterraError::domain(format!(
                "kernel {} not defined at t = {t}",
                self.name()
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self.power_exponent() {
            Some(a) if a == 1.0 => 1.0,
            Some(a) if a == 2.0 => t,
            Some(a) => t.powf(a - 1.0) / gamma(a),
            None => (-t).exp(),
        }
    }

    /// `∫_lo^hi a(r) dr` and `∫_lo^hi r a(r) dr` for `0 ≤ lo < hi`.
    fn cell_moments(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self.power_exponent() {
            Some(a) if a == 1.0 => (hi - lo, 0.5 * (hi * hi - lo * lo)),
            Some(a) if a == 2.0 => (
                0.5 * (hi * hi - lo * lo),
                (hi * hi * hi - lo * lo * lo) / 3.0,
            ),
            Some(a) => {
                let g = gamma(a);
                (
                    (hi.powf(a) - lo.powf(a)) / (a * g),
                    (hi.powf(a + 1.0) - lo.powf(a + 1.0)) / ((a + 1.0) * g),
                )
            }
            None => {
                let e_lo = (-lo).exp();
                let e_hi = (-hi).exp();
                (
                    -e_lo * (-(hi - lo)).exp_m1(),
                    (1.0 + lo) * e_lo - (1.0 + hi) * e_hi,
                )
            }
        }
    }
}

/// Closed-form relaxation function for the kernels where it is known.
pub fn relaxation_closed(k: &KernelSpec, gamma_: f64, t: f64) -> Result<f64> {
    if !(gamma_ >= 0.0) || !(t >= 0.0) {
        return Err(VolterraError::domain(format!(
            "relaxation needs gamma >= 0 and t >= 0 (got gamma = {gamma_}, t = {t})"
        )));
    }
    if gamma_ == 0.0 {
        return Ok(1.0);
    }
    match k.power_exponent() {
        Some(a) if a == 1.0 => Ok((-gamma_ * t).exp()),
        Some(a) if a == 2.0 => Ok((gamma_.sqrt() * t).cos()),
        Some(_) => Err(VolterraError::UnsupportedClosedForm(k.name())),
        None => Ok((1.0 + gamma_ * (-(1.0 + gamma_) * t).exp()) / (1.0 + gamma_)),
    }
}

/// Sampled relaxation function on a uniform grid `t_i = i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationTable {
    pub gamma: f64,
    pub step: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl RelaxationTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear interpolation; `t` is clamped to the table range.
    pub fn interpolate(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = (t / self.step).clamp(0.0, last as f64);
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return self.values[0];
        }
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,s")?;
        for (t, s) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Solves the scalar relaxation equation by the product-trapezoidal rule.
///
/// The unknown is piecewise linear between grid points and the kernel is
/// integrated exactly against each linear piece, so weakly singular
/// power kernels never get evaluated at the origin. Returns `count + 1`
/// samples at `0, step, ..., count·step`.
pub fn relaxation_numeric(
    k: &KernelSpec,
    gamma_: f64,
    step: f64,
    count: usize,
) -> Result<RelaxationTable> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(VolterraError::domain(format!("step must be positive, got {step}")));
    }
    if !(gamma_ >= 0.0 && gamma_.is_finite()) {
        return Err(VolterraError::domain(format!("gamma must be >= 0, got {gamma_}")));
    }
    let times: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    let mut values = vec![1.0; count + 1];
    if gamma_ == 0.0 || count == 0 {
        return Ok(RelaxationTable {
            gamma: gamma_,
            step,
            times,
            values,
        });
    }

    // Cell ℓ covers lags u ∈ [ℓΔ, (ℓ+1)Δ]; `near` multiplies the sample at
    // the smaller lag, `far` the one at the larger lag.
    let mut near = Vec::with_capacity(count);
    let mut far = Vec::with_capacity(count);
    for l in 0..count {
        let lo = l as f64 * step;
        let hi = (l + 1) as f64 * step;
        let (m0, m1) = k.cell_moments(lo, hi);
        near.push((hi * m0 - m1) / step);
        far.push((m1 - lo * m0) / step);
    }
    // Merged weight on s_{i-ℓ} for 1 ≤ ℓ: near[ℓ] + far[ℓ-1].
    let merged: Vec<f64> = (1..count).map(|l| near[l] + far[l - 1]).collect();
    let denom = 1.0 + gamma_ * near[0];

    for i in 1..=count {
        let mut conv = far[i - 1] * values[0];
        for l in 1..i {
            conv += merged[l - 1] * values[i - l];
        }
        let s = (1.0 - gamma_ * conv) / denom;
        if !s.is_finite() || s.abs() > INSTABILITY_THRESHOLD {
            return Err(VolterraError::Unstable { step: i, value: s });
        }
        values[i] = s;
    }
    Ok(RelaxationTable {
        gamma: gamma_,
        step,
        times,
        values,
    })
}

/// Outcome of [`check_complete_positivity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositivityReport {
    /// All samples lie in `[0, 1]`.
    pub nonneg: bool,
    pub nonincreasing: bool,
    pub first_negative: Option<usize>,
    pub first_increase: Option<usize>,
    /// Earliest index at which either property fails.
    pub first_violation: Option<usize>,
}

pub fn check_complete_positivity(tbl: &RelaxationTable) -> PositivityReport {
    let first_negative = tbl
        .values
        .iter()
        .position(|s| !(-POSITIVITY_TOL..=1.0 + POSITIVITY_TOL).contains(s));
    let first_increase = tbl
        .values
        .windows(2)
        .position(|w| w[1] > w[0] + POSITIVITY_TOL)
        .map(|i| i + 1);
    let first_violation = match (first_negative, first_increase) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    PositivityReport {
        nonneg: first_negative.is_none(),
        nonincreasing: first_increase.is_none(),
        first_negative,
        first_increase,
        first_violation,
    }
}
