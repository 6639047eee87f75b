//! Closed-form resolvents for `A = ∂²/∂x²` with the heat (`a ≡ 1`) and wave
//! (`a(t) = t`) kernels, and the matching reference solutions for the
//! Gaussian initial profile `X_0(x) = e^{-x²/4}`.

use std::f64::consts::PI;

use crate::basis::Quadrature;
use crate::error::{Result, VolterraError};
use crate::kernels::KernelSpec;

/// Half-width of the heat convolution window in units of `sqrt(t)`.
pub const HEAT_WINDOW: f64 = 12.0;

/// Gauss nodes per heat convolution.
pub const HEAT_NODES: usize = 200;

/// Which closed resolvent family to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventKind {
    Heat,
    Wave,
}

impl ResolventKind {
    pub fn from_alpha(alpha: u32) -> Result<Self> {
        match alpha {
            1 => Ok(ResolventKind::Heat),
            2 => Ok(ResolventKind::Wave),
            _ => Err(VolterraError::domain("alpha must be 1 or 2")),
        }
    }

    pub fn alpha(&self) -> u32 {
        match self {
            ResolventKind::Heat => 1,
            ResolventKind::Wave => 2,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        match self {
            ResolventKind::Heat => KernelSpec::Constant,
            ResolventKind::Wave => KernelSpec::Linear,
        }
    }
}

impl TryFrom<KernelSpec> for ResolventKind {
    type Error = VolterraError;

    fn try_from(k: KernelSpec) -> Result<Self> {
        match k.power_exponent() {
            Some(a) if a == 1.0 => Ok(ResolventKind::Heat),
            Some(a) if a == 2.0 => Ok(ResolventKind::Wave),
            _ => Err(VolterraError::domain(format!(
                "no closed resolvent for kernel {}",
                k.name()
            ))),
        }
    }
}

/// The initial profile `e^{-x²/4}` used throughout the reference problems.
pub fn gaussian_profile(x: f64) -> f64 {
    (-x * x / 4.0).exp()
}

/// Heat kernel `(4πt)^{-1/2} exp(-x²/4t)`.
pub fn phi_heat(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(VolterraError::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(phi_heat_unchecked(t, x))
}

fn phi_heat_unchecked(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Applies resolvents to functions of one space variable.
#[derive(Debug, Clone)]
pub struct Resolvent {
    kind: ResolventKind,
    rule: Quadrature,
}

impl Resolvent {
    pub fn new(kind: ResolventKind) -> Self {
        Self {
            kind,
            rule: Quadrature::gauss_legendre(HEAT_NODES).expect("positive order"),
        }
    }

    pub fn kind(&self) -> ResolventKind {
        self.kind
    }

    /// `(S(t) v)(x)`.
    ///
    /// Heat: `∫ φ_1(t, y) v(x - y) dy` by Gauss quadrature over `|y| ≤ 12 sqrt(t)`.
    /// Wave: `½ (v(x - t) + v(x + t))` exactly.
    pub fn apply<F: Fn(f64) -> f64>(&self, t: f64, v: F, x: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(VolterraError::domain(format!("resolvent needs t >= 0, got {t}")));
        }
        Ok(match self.kind {
            ResolventKind::Heat if t == 0.0 => v(x),
            ResolventKind::Heat => {
                let half = HEAT_WINDOW * t.sqrt();
                self.rule
                    .integrate(-half, half, |y| phi_heat_unchecked(t, y) * v(x - y))
            }
            ResolventKind::Wave => 0.5 * (v(x - t) + v(x + t)),
        })
    }

    /// `S(t)v` sampled on a set of points.
    pub fn apply_on<F: Fn(f64) -> f64>(&self, t: f64, v: F, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.apply(t, &v, x)).collect()
    }
}

/// Convenience wrapper around [`Resolvent::apply`].
pub fn apply_resolvent<F: Fn(f64) -> f64>(kind: ResolventKind, t: f64, v: F, x: f64) -> Result<f64> {
    Resolvent::new(kind).apply(t, v, x)
}

/// Exact solution of the noise-free equation for `X_0(x) = e^{-x²/4}`.
pub fn analytic_solution(kind: ResolventKind, t: f64, x: f64) -> f64 {
    match kind {
        ResolventKind::Heat => {
            let s = 1.0 + t;
            (-x * x / (4.0 * s)).exp() / s.sqrt()
        }
        ResolventKind::Wave => 0.5 * (gaussian_profile(x - t) + gaussian_profile(x + t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn heat_kernel_values() {
        assert_abs_diff_eq!(phi_heat(1.0, 0.0).unwrap(), 0.28209479177387814, epsilon = 1e-15);
        assert_eq!(phi_heat(1.0, 1.3).unwrap(), phi_heat(1.0, -1.3).unwrap());
        assert!(phi_heat(0.0, 1.0).is_err());
        assert!(phi_heat(-1.0, 1.0).is_err());
    }

    #[test]
    fn heat_kernel_normalized() {
        let q = Quadrature::gauss_legendre(400).unwrap();
        for t in [0.05, 0.5, 1.0, 3.0, 6.0] {
            let w = 12.0 * f64::sqrt(t);
            let mass = q.integrate(-w, w, |x| phi_heat(t, x).unwrap());
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn alpha_validation() {
        assert_eq!(ResolventKind::from_alpha(1).unwrap(), ResolventKind::Heat);
        assert_eq!(ResolventKind::from_alpha(2).unwrap(), ResolventKind::Wave);
        let err = ResolventKind::from_alpha(3).unwrap_err();
        assert!(err.to_string().contains("alpha must be 1 or 2"));
        assert!(ResolventKind::try_from(KernelSpec::Exponential).is_err());
        assert!(ResolventKind::try_from(KernelSpec::power(1.5).unwrap()).is_err());
        assert_eq!(
            ResolventKind::try_from(KernelSpec::power(1.0).unwrap()).unwrap(),
            ResolventKind::Heat
        );
    }

    #[test]
    fn wave_translation() {
        let r = Resolvent::new(ResolventKind::Wave);
        for x in [-3.0, 0.0, 1.7] {
            assert_eq!(r.apply(0.0, gaussian_profile, x).unwrap(), gaussian_profile(x));
        }
        let v = r.apply(2.0, gaussian_profile, 2.0).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (1.0 + (-4.0f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.5091578194443671, epsilon = 1e-12);
    }

    #[test]
    fn heat_identity_at_zero_time() {
        let r = Resolvent::new(ResolventKind::Heat);
        let v = |x: f64| x.sin() + 2.0;
        assert_eq!(r.apply(0.0, v, 0.4).unwrap(), v(0.4));
        assert!(r.apply(-1.0, v, 0.4).is_err());
    }

    #[test]
    fn heat_gaussian_convolution_identity() {
        let r = Resolvent::new(ResolventKind::Heat);
        for t in [0.01, 0.3, 1.0, 3.0, 6.0] {
            for x in [-5.0, -1.0, 0.0, 0.7, 4.0] {
                let got = r.apply(t, gaussian_profile, x).unwrap();
                assert_abs_diff_eq!(got, analytic_solution(ResolventKind::Heat, t, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analytic_values() {
        assert_eq!(analytic_solution(ResolventKind::Heat, 0.0, 0.0), 1.0);
        assert_abs_diff_eq!(analytic_solution(ResolventKind::Heat, 3.0, 0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            analytic_solution(ResolventKind::Wave, 6.0, 6.0),
            0.5 * (1.0 + (-36.0f64).exp()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn heat_conserves_mass_and_respects_maximum() {
        let r = Resolvent::new(ResolventKind::Heat);
        let q = Quadrature::gauss_legendre(600).unwrap();
        // bump with mass 1 supported essentially on [-3, 3]
        let v = |x: f64| (-(x - 0.5) * (x - 0.5) * 2.0).exp() * (2.0 / PI).sqrt();
        let m0 = q.integrate(-30.0, 30.0, v);
        for t in [0.5, 2.0, 6.0] {
            let m = q.integrate(-30.0, 30.0, |x| r.apply(t, v, x).unwrap());
            assert_abs_diff_eq!(m, m0, epsilon = 1e-8);
            let vmax = (0..=300).map(|i| v(-3.0 + 0.02 * i as f64)).fold(0.0, f64::max);
            let smax = (0..=300)
                .map(|i| r.apply(t, v, -3.0 + 0.02 * i as f64).unwrap())
                .fold(0.0, f64::max);
            assert!(smax <= vmax);
        }
    }

    #[test]
    fn heat_special_case_semigroup() {
        // Only the heat resolvent composes; nothing else relies on this.
        let r = Resolvent::new(ResolventKind::Heat);
        let (t, s) = (0.7, 1.1);
        for x in [0.0, 1.5] {
            let lhs = r.apply(t + s, gaussian_profile, x).unwrap();
            let rhs = r
                .apply(t, |y| r.apply(s, gaussian_profile, y).unwrap(), x)
                .unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn heat_solution_satisfies_volterra_equation() {
        // X(t,x) = X_0(x) + ∫_0^t X_xx(τ, x) dτ with a ≡ 1.
        let xxx = |t: f64, x: f64| {
            let s = 1.0 + t;
            analytic_solution(ResolventKind::Heat, t, x) * (x * x / (4.0 * s * s) - 1.0 / (2.0 * s))
        };
        let q = Quadrature::gauss_legendre(40).unwrap();
        for &t in &[0.3, 1.0, 4.0, 6.0] {
            for &x in &[-4.0, -0.5, 0.0, 2.5] {
                let rhs = gaussian_profile(x) + q.integrate(0.0, t, |tau| xxx(tau, x));
                assert_abs_diff_eq!(analytic_solution(ResolventKind::Heat, t, x), rhs, epsilon = 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn wave_preserves_evenness(t in 0.0f64..8.0, x in -10.0f64..10.0, w in 0.1f64..3.0) {
            let r = Resolvent::new(ResolventKind::Wave);
            let v = move |y: f64| (-(y * y) * w).exp() + (y * 0.3).cos();
            let a = r.apply(t, v, x).unwrap();
            let b = r.apply(t, v, -x).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }
}
