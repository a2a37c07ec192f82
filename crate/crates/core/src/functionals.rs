//! Entropy, entropy power, Fisher information, McKean's `J`, Costa's `Υ`
//! and relative entropy on density grids.
//!
//! Integrands involving `log f` are evaluated only on the nodes where
//! `f ≥ LOG_FLOOR · max f` (and whose difference stencil stays above that
//! cut); the remaining nodes contribute zero.

use serde::Serialize;

use crate::analytic::GaussianSpec;
use crate::diff::{self, floored_log, Stencil, LOG_FLOOR};
use crate::error::{FlowError, Result};
use crate::grid::DensityGrid;
use crate::scalar::Real;

/// Allowed deviation from unit mass for functionals that require a probability
/// density (widened to `64 ε` for scalars coarser than that).
pub const UNIT_MASS_TOL: f64 = 1e-8;

pub(crate) fn unit_mass_tol<T: Real>() -> T {
    T::lit(UNIT_MASS_TOL).max(T::lit(64.0) * T::epsilon())
}

pub(crate) fn require_unit_mass<T: Real>(g: &DensityGrid<T>) -> Result<()> {
    if (g.mass() - T::one()).abs() > unit_mass_tol() {
        return Err(FlowError::NotNormalized(g.mass().to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// `−∫ f log f` without any mass requirement.
pub fn entropy_unnormalized<T: Real>(g: &DensityGrid<T>) -> T {
    let cut = T::lit(LOG_FLOOR) * g.max_value();
    let v = g.values();
    -g.domain().integrate_by(|i| if v[i] >= cut && v[i] > T::zero() { v[i] * v[i].ln() } else { T::zero() })
}

/// Shannon entropy `H(f) = −∫ f log f` of a unit-mass grid.
pub fn entropy<T: Real>(g: &DensityGrid<T>) -> Result<T> {
    require_unit_mass(g)?;
    Ok(entropy_unnormalized(g))
}

/// `N(f) = exp((2/n) H(f))`.
pub fn entropy_power<T: Real>(g: &DensityGrid<T>) -> Result<T> {
    let h = entropy(g)?;
    Ok(power_from_entropy(h, g.dim()))
}

#[inline]
pub(crate) fn power_from_entropy<T: Real>(h: T, n: usize) -> T {
    (T::lit(2.0) * h / T::from_usize_(n)).exp()
}

/// Derivatives of `log f` shared by `I` and `J`.
struct LogDerivatives<T> {
    grad: Vec<Vec<T>>,
    hess: diff::LogHessian<T>,
}

fn log_derivatives<T: Real>(g: &DensityGrid<T>, stencil: Stencil) -> LogDerivatives<T> {
    let d = g.domain();
    let shape = d.shape();
    let (logs, raw_mask) = floored_log(g, T::lit(LOG_FLOOR));
    let mask = diff::erode(&raw_mask, &shape, stencil.radius());
    let grad = (0..d.dim())
        .map(|ax| diff::partial(&logs, &shape, ax, d.spacing(ax), stencil))
        .collect();
    let hess = diff::log_hessian_from_logs(g, &logs, mask, stencil);
    LogDerivatives { grad, hess }
}

impl<T: Real> LogDerivatives<T> {
    fn fisher(&self, g: &DensityGrid<T>) -> T {
        let (v, mask) = (g.values(), self.hess.mask());
        g.domain().integrate_by(|i| {
            if !mask[i] {
                return T::zero();
            }
            let s = self.grad.iter().fold(T::zero(), |acc, c| acc + c[i] * c[i]);
            v[i] * s
        })
    }

    fn mckean_j(&self, g: &DensityGrid<T>) -> T {
        let (v, mask) = (g.values(), self.hess.mask());
        T::lit(2.0)
            * g.domain().integrate_by(|i| if mask[i] { v[i] * self.hess.frobenius_sq(i) } else { T::zero() })
    }
}

/// Fisher information `I(f) = ∫ |∇f|²/f = ∫ f |∇ log f|²`.
///
/// Homogeneous of degree one in `f`, so no mass requirement.
pub fn fisher<T: Real>(g: &DensityGrid<T>) -> T {
    log_derivatives(g, Stencil::default()).fisher(g)
}

/// McKean's functional `J(f) = 2 Σ_{ij} ∫ (∂²_{ij} log f)² f`.
pub fn mckean_j<T: Real>(g: &DensityGrid<T>) -> T {
    log_derivatives(g, Stencil::default()).mckean_j(g)
}

/// One-dimensional `J(f) = 2 (∫ f''²/f − ⅓ ∫ f'⁴/f³)`, computed from
/// derivatives of `f` itself. Used as an independent check of [`mckean_j`].
pub fn mckean_j_raw_1d<T: Real>(g: &DensityGrid<T>) -> Result<T> {
    if g.dim() != 1 {
        return Err(FlowError::DimensionMismatch { expected: 1, found: g.dim() });
    }
    let d = g.domain();
    let shape = d.shape();
    let h = d.spacing(0);
    let stencil = Stencil::default();
    let f1 = diff::partial(g.values(), &shape, 0, h, stencil);
    let f2 = diff::partial2(g.values(), &shape, 0, h, stencil);
    let (_, raw) = floored_log(g, T::lit(LOG_FLOOR));
    let mask = diff::erode(&raw, &shape, stencil.radius());
    let v = g.values();
    let third = T::one() / T::lit(3.0);
    let integral = d.integrate_by(|i| {
        if !mask[i] {
            return T::zero();
        }
        let r = f1[i] / v[i];
        f2[i] * f2[i] / v[i] - third * r * r * r * r * v[i]
    });
    Ok(T::lit(2.0) * integral)
}

/// Costa's functional `Υ(f) = N(f) · I(f)`.
pub fn upsilon<T: Real>(g: &DensityGrid<T>) -> Result<T> {
    Ok(entropy_power(g)? * fisher(g))
}

/// `∫ f log(f / M)` for a Gaussian reference `M` evaluated analytically.
pub fn kl_divergence<T: Real>(g: &DensityGrid<T>, reference: &GaussianSpec<T>) -> Result<T> {
    require_unit_mass(g)?;
    if reference.dim() != g.dim() {
        return Err(FlowError::DimensionMismatch { expected: g.dim(), found: reference.dim() });
    }
    let d = g.domain();
    let cut = T::lit(LOG_FLOOR) * g.max_value();
    let v = g.values();
    let dim = g.dim();
    Ok(d.integrate_by(|i| {
        if v[i] < cut || v[i] <= T::zero() {
            return T::zero();
        }
        let mut x = [T::zero(); 2];
        d.coords_into(i, &mut x[..dim]);
        v[i] * (v[i].ln() - reference.log_pdf(&x[..dim]))
    }))
}

/// `∫ |∇g|²` with the sixth-order stencil applied to `g` directly.
pub fn dirichlet_energy<T: Real>(g: &DensityGrid<T>) -> T {
    let grad = diff::gradient_with(g, Stencil::default());
    g.domain().integrate_by(|i| grad.iter().fold(T::zero(), |acc, c| acc + c[i] * c[i]))
}

/// `(t, H, N, I, J, Υ)` evaluated at one flow time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalSnapshot<T> {
    pub t: T,
    pub entropy: T,
    pub entropy_power: T,
    pub fisher: T,
    pub mckean_j: T,
    pub upsilon: T,
}

impl<T: Real> FunctionalSnapshot<T> {
    /// Evaluates every functional on a unit-mass grid, sharing the `log f` derivatives.
    pub fn evaluate(g: &DensityGrid<T>, t: T) -> Result<Self> {
        let entropy = entropy(g)?;
        let ld = log_derivatives(g, Stencil::default());
        let fisher = ld.fisher(g);
        let mckean_j = ld.mckean_j(g);
        let entropy_power = power_from_entropy(entropy, g.dim());
        Ok(Self { t, entropy, entropy_power, fisher, mckean_j, upsilon: entropy_power * fisher })
    }
}
