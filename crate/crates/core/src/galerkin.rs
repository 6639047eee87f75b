//! Galerkin-in-time, finite-difference-in-space solver for
//! `X(t,x) = X_0(x) + ∫_0^t a(t - τ) ∂²X/∂x²(τ, x) dτ`.
//!
//! Expanding `X_n(x,t) = Σ_j c_j(x) φ_j(t)` and testing against each `φ_j`
//! gives `g_j(x) = c_j(x) - Σ_k a_jk c_k''(x)`; the second derivative is
//! replaced by the three-point stencil on a uniform grid with homogeneous
//! Dirichlet values at both ends. Unknowns are ordered basis-major:
//! `(c_1(x_1..x_{m-1}), c_2(..), ..., c_n(..))`.

use std::io::Write;

use statrs::function::gamma::gamma;

use crate::basis::{BasisSet, JacobiRule, Quadrature};
use crate::error::{Result, VolterraError};
use crate::kernels::KernelSpec;
use crate::linalg::{dirichlet_sine_basis, dirichlet_stencil_eigenvalues, Lu, Matrix};

/// Absolute agreement required between two quadrature orders for `a_jk`.
pub const AJK_TOL: f64 = 1e-10;

const AJK_MAX_DOUBLINGS: usize = 5;

/// Uniform grid `x_i = x_min + i·h`, `i = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    x_min: f64,
    x_max: f64,
    m: usize,
}

impl SpaceGrid {
    pub fn new(x_min: f64, x_max: f64, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(VolterraError::domain(format!("grid needs m >= 3 intervals, got {m}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(VolterraError::domain(format!(
                "grid needs x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { x_min, x_max, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.m as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h()
    }

    /// All `m + 1` nodes including the two boundary nodes.
    pub fn points(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.x(i)).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.m - 1
    }
}

/// Values of a field on the full grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max magnitude over interior nodes only.
    pub fn interior_max_abs(&self) -> f64 {
        let n = self.values.len();
        self.values[1..n - 1].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W, value_column: &str) -> std::io::Result<()> {
        writeln!(out, "x,{value_column}")?;
        for (x, v) in self.x.iter().zip(&self.values) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

/// `a_jk = ∫_0^T φ_j(τ) ∫_0^τ a(τ - s) φ_k(s) ds dτ`, as a row-major n×n matrix.
///
/// The order of `q` seeds the rule; it is doubled until two successive
/// orders agree to [`AJK_TOL`].
pub fn compute_ajk(k: &KernelSpec, b: &BasisSet, q: &Quadrature) -> Result<Matrix> {
    let mut order = q.order().max(1);
    let mut prev = ajk_at_order(k, b, order)?;
    for _ in 0..AJK_MAX_DOUBLINGS {
        order *= 2;
        let next = ajk_at_order(k, b, order)?;
        let diff = (0..b.n())
            .flat_map(|i| (0..b.n()).map(move |j| (i, j)))
            .map(|(i, j)| (next[(i, j)] - prev[(i, j)]).abs())
            .fold(0.0, f64::max);
        if diff <= AJK_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(VolterraError::Quadrature(format!(
        "a_jk for kernel {} did not settle to {AJK_TOL:e} by order {order}",
        k.name()
    )))
}

fn ajk_at_order(k: &KernelSpec, b: &BasisSet, order: usize) -> Result<Matrix> {
    let n = b.n();
    let horizon = b.horizon();
    let mut out = Matrix::zeros(n, n);
    let mut phi_outer = vec![0.0; n];
    let mut phi_inner = vec![0.0; n];
    let mut inner = vec![0.0; n];

    match k.power_exponent() {
        Some(alpha) => {
            // With τ = T v and s = τ w the double integral becomes
            // T^(α+1)/Γ(α) ∫ v^α φ_j(Tv) ∫ (1-w)^(α-1) φ_k(Tvw) dw dv,
            // which Gauss-Jacobi rules integrate exactly for polynomial φ.
            let outer = JacobiRule::new(order, 0.0, alpha)?;
            let inner_rule = JacobiRule::new(order, alpha - 1.0, 0.0)?;
            let g = if alpha == 1.0 || alpha == 2.0 { 1.0 } else { gamma(alpha) };
            let scale = horizon.powf(alpha + 1.0) / g;
            for (&v, &wv) in outer.nodes().iter().zip(outer.weights()) {
                let tau = horizon * v;
                b.fill_unchecked(tau, &mut phi_outer);
                inner.iter_mut().for_each(|x| *x = 0.0);
                for (&w, &ww) in inner_rule.nodes().iter().zip(inner_rule.weights()) {
                    b.fill_unchecked(tau * w, &mut phi_inner);
                    for (acc, p) in inner.iter_mut().zip(&phi_inner) {
                        *acc += ww * p;
                    }
                }
                accumulate(&mut out, &phi_outer, &inner, scale * wv);
            }
        }
        None => {
            let rule = Quadrature::gauss_legendre(order)?;
            for (tau, wt) in rule.mapped(0.0, horizon) {
                b.fill_unchecked(tau, &mut phi_outer);
                inner.iter_mut().for_each(|x| *x = 0.0);
                for (s, ws) in rule.mapped(0.0, tau) {
                    b.fill_unchecked(s, &mut phi_inner);
                    let kw = ws * k.eval_unchecked(tau - s);
                    for (acc, p) in inner.iter_mut().zip(&phi_inner) {
                        *acc += kw * p;
                    }
                }
                accumulate(&mut out, &phi_outer, &inner, wt);
            }
        }
    }
    Ok(out)
}

fn accumulate(out: &mut Matrix, outer: &[f64], inner: &[f64], weight: f64) {
    for (j, pj) in outer.iter().enumerate() {
        let wj = weight * pj;
        for (kk, ik) in inner.iter().enumerate() {
            out[(j, kk)] += wj * ik;
        }
    }
}

/// `g_j(x_i) = X_0(x_i) ∫_0^T φ_j`, blocked by basis index over interior nodes.
pub fn compute_g<F: Fn(f64) -> f64>(x0: F, b: &BasisSet, grid: &SpaceGrid) -> Result<Vec<f64>> {
    let interior: Vec<f64> = (1..grid.m()).map(|i| x0(grid.x(i))).collect();
    let mut g = Vec::with_capacity(b.n() * interior.len());
    for j in 1..=b.n() {
        let mean = b.integrate_basis(j)?;
        g.extend(interior.iter().map(|v| v * mean));
    }
    Ok(g)
}

/// One tridiagonal Toeplitz block of the system matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriBlock {
    pub sub: f64,
    pub diag: f64,
    pub sup: f64,
}

/// Linear solver used for the block system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Dense LU with partial pivoting on the full N×N matrix.
    #[default]
    Dense,
    /// Diagonalize the stencil with the discrete sine basis and solve one
    /// n×n system per spatial mode.
    Kronecker,
}

/// The block system `(I_N + A ⊗ Tri(-1,2,-1)/h²) c = g`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    ajk: Matrix,
    g: Vec<f64>,
    grid: SpaceGrid,
}

impl GalerkinSystem {
    pub fn assemble(ajk: Matrix, grid: SpaceGrid, g: Vec<f64>) -> Result<Self> {
        if ajk.rows() != ajk.cols() || ajk.rows() == 0 {
            return Err(VolterraError::domain("a_jk must be a non-empty square matrix"));
        }
        let dim = ajk.rows() * grid.interior_count();
        if g.len() != dim {
            return Err(VolterraError::domain(format!(
                "right-hand side has length {}, system dimension is {dim}",
                g.len()
            )));
        }
        Ok(Self { ajk, g, grid })
    }

    pub fn n(&self) -> usize {
        self.ajk.rows()
    }

    pub fn dim(&self) -> usize {
        self.n() * self.grid.interior_count()
    }

    pub fn ajk(&self) -> &Matrix {
        &self.ajk
    }

    pub fn rhs(&self) -> &[f64] {
        &self.g
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    /// Block `(j, k)`, 0-based.
    pub fn block(&self, j: usize, k: usize) -> TriBlock {
        let h2 = self.grid.h() * self.grid.h();
        let a = self.ajk[(j, k)] / h2;
        TriBlock {
            sub: -a,
            diag: if j == k { 1.0 + 2.0 * a } else { 2.0 * a },
            sup: -a,
        }
    }

    /// Materializes the full matrix.
    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mi = self.grid.interior_count();
        let mut out = Matrix::zeros(self.dim(), self.dim());
        for j in 0..n {
            for k in 0..n {
                let blk = self.block(j, k);
                for i in 0..mi {
                    let r = j * mi + i;
                    let c = k * mi + i;
                    out[(r, c)] = blk.diag;
                    if i > 0 {
                        out[(r, c - 1)] = blk.sub;
                    }
                    if i + 1 < mi {
                        out[(r, c + 1)] = blk.sup;
                    }
                }
            }
        }
        out
    }

    /// Structured product `𝒜 c`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mi = self.grid.interior_count();
        let h2 = self.grid.h() * self.grid.h();
        // second differences of each coefficient block, with zero boundary values
        let lap: Vec<f64> = (0..n * mi)
            .map(|r| {
                let (k, i) = (r / mi, r % mi);
                let left = if i > 0 { c[k * mi + i - 1] } else { 0.0 };
                let right = if i + 1 < mi { c[k * mi + i + 1] } else { 0.0 };
                (2.0 * c[r] - left - right) / h2
            })
            .collect();
        (0..n * mi)
            .map(|r| {
                let (j, i) = (r / mi, r % mi);
                c[r] + (0..n).map(|k| self.ajk[(j, k)] * lap[k * mi + i]).sum::<f64>()
            })
            .collect()
    }

    /// `‖𝒜c - g‖_∞`.
    pub fn residual_inf(&self, c: &[f64]) -> f64 {
        self.apply(c)
            .iter()
            .zip(&self.g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, basis: &BasisSet) -> Result<SolutionSurface> {
        self.solve_with(basis, SolverKind::Dense)
    }

    pub fn solve_with(&self, basis: &BasisSet, solver: SolverKind) -> Result<SolutionSurface> {
        if basis.n() != self.n() {
            return Err(VolterraError::domain(format!(
                "basis has {} functions, system expects {}",
                basis.n(),
                self.n()
            )));
        }
        let c = match solver {
            SolverKind::Dense => Lu::factor(self.to_dense())?.solve(&self.g),
            SolverKind::Kronecker => self.solve_kronecker()?,
        };
        let residual = self.residual_inf(&c);
        let mi = self.grid.interior_count();
        let coefficients = c
            .chunks(mi)
            .map(|block| {
                let mut row = Vec::with_capacity(mi + 2);
                row.push(0.0);
                row.extend_from_slice(block);
                row.push(0.0);
                row
            })
            .collect();
        Ok(SolutionSurface {
            basis: *basis,
            grid: self.grid,
            coefficients,
            residual,
        })
    }

    fn solve_kronecker(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let m = self.grid.m();
        let mi = self.grid.interior_count();
        let h2 = self.grid.h() * self.grid.h();
        let q = dirichlet_sine_basis(m);
        let lam = dirichlet_stencil_eigenvalues(m);
        // Q is symmetric and orthogonal, so the same matrix transforms both ways.
        let g_hat: Vec<Vec<f64>> = self.g.chunks(mi).map(|gj| q.matvec(gj)).collect();
        let mut c_hat = vec![vec![0.0; mi]; n];
        for p in 0..mi {
            let mode = Matrix::from_fn(n, n, |j, k| {
                let id = if j == k { 1.0 } else { 0.0 };
                id + lam[p] / h2 * self.ajk[(j, k)]
            });
            let rhs: Vec<f64> = g_hat.iter().map(|gj| gj[p]).collect();
            let sol = Lu::factor(mode)?.solve(&rhs);
            for (j, v) in sol.into_iter().enumerate() {
                c_hat[j][p] = v;
            }
        }
        Ok(c_hat.iter().flat_map(|cj| q.matvec(cj)).collect())
    }
}

/// Coefficients `c_j(x_i)` of the solved expansion, including zero boundary values.
#[derive(Debug, Clone)]
pub struct SolutionSurface {
    basis: BasisSet,
    grid: SpaceGrid,
    coefficients: Vec<Vec<f64>>,
    residual: f64,
}

impl SolutionSurface {
    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    /// `n` rows of `m + 1` values.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// `‖𝒜c - g‖_∞` of the solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `X_n(x_i, t)` at every grid node.
    pub fn evaluate(&self, t: f64) -> Result<ScalarField> {
        let phi = self.basis.eval_all(t)?;
        let values = (0..=self.grid.m())
            .map(|i| {
                self.coefficients
                    .iter()
                    .zip(&phi)
                    .map(|(c, p)| c[i] * p)
                    .sum()
            })
            .collect();
        Ok(ScalarField {
            t,
            x: self.grid.points(),
            values,
        })
    }

    /// `X_n(x_i, t) - exact(t, x_i)` at every grid node.
    pub fn error_field<F: Fn(f64, f64) -> f64>(&self, exact: F, t: f64) -> Result<ScalarField> {
        let mut field = self.evaluate(t)?;
        for (v, &x) in field.values.iter_mut().zip(&field.x) {
            *v -= exact(t, x);
        }
        Ok(field)
    }

    /// Rows `t,x,value` for each requested time.
    pub fn write_csv<W: Write>(&self, times: &[f64], mut out: W) -> Result<()> {
        writeln!(out, "t,x,value")?;
        for &t in times {
            let field = self.evaluate(t)?;
            for (x, v) in field.x.iter().zip(&field.values) {
                writeln!(out, "{t},{x},{v}")?;
            }
        }
        Ok(())
    }
}

/// Everything needed to run the deterministic solver end to end.
#[derive(Debug, Clone, Copy)]
pub struct DeterministicProblem {
    pub kernel: KernelSpec,
    pub basis: BasisSet,
    pub grid: SpaceGrid,
    pub solver: SolverKind,
}

impl DeterministicProblem {
    pub fn solve<F: Fn(f64) -> f64>(&self, x0: F) -> Result<SolutionSurface> {
        let ajk = compute_ajk(&self.kernel, &self.basis, &self.basis.default_quadrature())?;
        let g = compute_g(x0, &self.basis, &self.grid)?;
        GalerkinSystem::assemble(ajk, self.grid, g)?.solve_with(&self.basis, self.solver)
    }
}
