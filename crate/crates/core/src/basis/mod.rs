//! Orthonormal temporal basis for the Galerkin expansion on `[0, T]`.

mod quadrature;

pub use quadrature::{JacobiRule, Quadrature};

use crate::error::{Result, VolterraError};
use crate::linalg::Matrix;

/// Family of the temporal basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisKind {
    /// Shifted Legendre polynomials normalized in L²(0, T):
    /// `φ_j(t) = sqrt((2j - 1) / T) · P_{j-1}(2t/T - 1)`.
    #[default]
    Legendre,
}

/// The first `n` functions of an orthonormal system on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSet {
    n: usize,
    horizon: f64,
    kind: BasisKind,
}

impl BasisSet {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        Self::with_kind(n, horizon, BasisKind::Legendre)
    }

    pub fn with_kind(n: usize, horizon: f64, kind: BasisKind) -> Result<Self> {
        if n == 0 {
            return Err(VolterraError::domain("basis dimension n must be positive"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(VolterraError::domain(format!(
                "basis horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(Self { n, horizon, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Gauss-Legendre rule of order `max(2n, 32)`.
    pub fn default_quadrature(&self) -> Quadrature {
        Quadrature::gauss_legendre((2 * self.n).max(32))
            .expect("order is positive")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        // Allow a few ulps of slack so grid times like k * dt land inside.
        let slack = 8.0 * f64::EPSILON * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(VolterraError::domain(format!(
                "time {t} outside basis interval [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// φ_j(t) for 1-based `j`.
    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(VolterraError::domain(format!(
                "basis index {j} outside 1..={}",
                self.n
            )));
        }
        self.check_time(t)?;
        Ok(self.eval_all_unchecked(t)[j - 1])
    }

    /// All `n` basis values at `t`.
    pub fn eval_all(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok(self.eval_all_unchecked(t))
    }

    pub(crate) fn eval_all_unchecked(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.fill_unchecked(t, &mut out);
        out
    }

    pub(crate) fn fill_unchecked(&self, t: f64, out: &mut [f64]) {
        match self.kind {
            BasisKind::Legendre => {
                let z = 2.0 * t / self.horizon - 1.0;
                let mut p_prev = 0.0;
                let mut p = 1.0;
                for (j, slot) in out.iter_mut().enumerate() {
                    // p holds P_j(z) here
                    *slot = ((2 * j + 1) as f64 / self.horizon).sqrt() * p;
                    let jf = (j + 1) as f64;
                    let p_next = ((2.0 * jf - 1.0) * z * p - (jf - 1.0) * p_prev) / jf;
                    p_prev = p;
                    p = p_next;
                }
            }
        }
    }

    /// Pairwise inner products `∫_0^T φ_i φ_j dτ`.
    pub fn gram_matrix(&self, q: &Quadrature) -> Matrix {
        let n = self.n;
        let mut g = Matrix::zeros(n, n);
        let mut vals = vec![0.0; n];
        for (t, w) in q.mapped(0.0, self.horizon) {
            self.fill_unchecked(t, &mut vals);
            for i in 0..n {
                let wi = w * vals[i];
                for j in 0..n {
                    g[(i, j)] += wi * vals[j];
                }
            }
        }
        g
    }

    /// `∫_0^T φ_j(τ) dτ` for 1-based `j`.
    pub fn integrate_basis(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(VolterraError::domain(format!(
                "basis index {j} outside 1..={}",
                self.n
            )));
        }
        Ok(match self.kind {
            // Only the constant function has a nonzero mean.
            BasisKind::Legendre if j == 1 => self.horizon.sqrt(),
            BasisKind::Legendre => 0.0,
        })
    }

    /// Expansion coefficients `(f, φ_j)` of `f` in the basis.
    pub fn project<F: FnMut(f64) -> f64>(&self, q: &Quadrature, mut f: F) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n];
        let mut vals = vec![0.0; self.n];
        for (t, w) in q.mapped(0.0, self.horizon) {
            let ft = w * f(t);
            self.fill_unchecked(t, &mut vals);
            for (c, v) in coeffs.iter_mut().zip(&vals) {
                *c += ft * v;
            }
        }
        coeffs
    }

    /// `Σ_j coeffs[j] φ_j(t)`.
    pub fn synthesize(&self, coeffs: &[f64], t: f64) -> Result<f64> {
        if coeffs.len() != self.n {
            return Err(VolterraError::domain(format!(
                "expected {} coefficients, got {}",
                self.n,
                coeffs.len()
            )));
        }
        let vals = self.eval_all(t)?;
        Ok(coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum())
    }
}
