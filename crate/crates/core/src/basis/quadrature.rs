//! Gaussian quadrature rules stored on the reference interval [0, 1].

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, VolterraError};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Gauss-Legendre rule on [0, 1].
///
/// Nodes are the roots of the Legendre polynomial of degree `order`, found by
/// Newton iteration on the three-term recurrence. The rule is exact for
/// polynomials of degree `2 * order - 1` and can be mapped to any `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(VolterraError::domain("quadrature order must be positive"));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let step = p / d;
                z -= step;
                if step.abs() < NEWTON_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(VolterraError::Quadrature(format!(
                    "Newton iteration for Legendre root {i} of order {n} did not converge"
                )));
            }
            // Refresh the derivative at the converged root for the weight.
            let (_, d) = legendre_with_derivative(n, z);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // Roots come out in decreasing order on [-1, 1]; store ascending on [0, 1].
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.5;
        }
        Ok(Self {
            order,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights affinely mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&v, &w)| (a + len * v, w * len))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for j in 1..=n {
        let jf = j as f64;
        let p_next = ((2.0 * jf - 1.0) * z * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (z * p - p_prev) / (z * z - 1.0);
    (p, d)
}

/// Gauss-Jacobi rule on [0, 1] for the weight `(1 - v)^a * v^b`, with
/// `a, b > -1`.
///
/// Built with the Golub-Welsch eigenvalue method. Used for integrands with
/// algebraic endpoint behaviour such as the power-law memory kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl JacobiRule {
    pub fn new(order: usize, a: f64, b: f64) -> Result<Self> {
        if order == 0 {
            return Err(VolterraError::domain("quadrature order must be positive"));
        }
        if !(a > -1.0 && b > -1.0) {
            return Err(VolterraError::domain(format!(
                "Jacobi exponents must exceed -1 (got a = {a}, b = {b})"
            )));
        }
        let n = order;
        let ab = a + b;
        // Recurrence coefficients of the monic Jacobi polynomials on [-1, 1].
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for (k, d) in diag.iter_mut().enumerate() {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            *d = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
        }
        for (i, o) in off.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            let s = 2.0 * k + ab;
            let beta = if i == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            *o = beta.sqrt();
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        // Total mass of the weight on [0, 1]: B(a + 1, b + 1).
        let mass = (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                (0.5 * (x + 1.0), mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self {
            a,
            b,
            nodes,
            weights,
        })
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates `∫_0^1 (1 - v)^a v^b f(v) dv`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * f(v))
            .sum()
    }
}
