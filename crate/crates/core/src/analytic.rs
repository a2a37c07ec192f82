//! Isotropic Gaussians and Gaussian mixtures.
//!
//! Both families are closed under the heat semigroup and under dilation, so
//! they provide exact oracles for every grid-level computation. `sigma` is the
//! per-coordinate variance: `M_σ(v) = (2πσ)^{-n/2} exp(-|v - m|² / (2σ))`.

use serde::Deserialize;

use crate::error::{FlowError, Result};
use crate::scalar::Real;

/// Isotropic Gaussian with mean `mean` and covariance `sigma · Id`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec<T> {
    mean: Vec<T>,
    sigma: T,
}

impl<T: Real> GaussianSpec<T> {
    pub fn new(mean: Vec<T>, sigma: T) -> Result<Self> {
        if mean.is_empty() {
            return Err(FlowError::InvalidSpec("gaussian needs dim >= 1".into()));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(FlowError::InvalidSpec(format!("sigma must be positive, got {sigma}")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(FlowError::InvalidSpec("mean must be finite".into()));
        }
        Ok(Self { mean, sigma })
    }

    pub fn centered(dim: usize, sigma: T) -> Result<Self> {
        Self::new(vec![T::zero(); dim], sigma)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn log_pdf(&self, v: &[T]) -> T {
        let r2 = v
            .iter()
            .zip(&self.mean)
            .fold(T::zero(), |acc, (&x, &m)| acc + (x - m) * (x - m));
        let n = T::from_usize_(self.dim());
        -T::lit(0.5) * n * (T::TAU() * self.sigma).ln() - r2 / (self.sigma + self.sigma)
    }

    pub fn pdf(&self, v: &[T]) -> T {
        self.log_pdf(v).exp()
    }

    /// `M_σ * M_{2t} = M_{σ+2t}`.
    pub fn heat_evolve(&self, t: T) -> Self {
        Self { mean: self.mean.clone(), sigma: self.sigma + t + t }
    }

    /// `aⁿ M(a v)`: mean `m/a`, variance `σ/a²`.
    pub fn dilate(&self, a: T) -> Self {
        Self { mean: self.mean.iter().map(|&m| m / a).collect(), sigma: self.sigma / (a * a) }
    }

    /// `∫ |v|² M(v) dv = nσ + |m|²`.
    pub fn second_moment(&self) -> T {
        T::from_usize_(self.dim()) * self.sigma
            + self.mean.iter().fold(T::zero(), |acc, &m| acc + m * m)
    }
}

/// Finite convex combination of isotropic Gaussians of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec<T> {
    components: Vec<GaussianSpec<T>>,
    weights: Vec<T>,
}

impl<T: Real> MixtureSpec<T> {
    pub fn new(components: Vec<GaussianSpec<T>>, weights: Vec<T>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(FlowError::InvalidSpec(format!(
                "{} components with {} weights",
                components.len(),
                weights.len()
            )));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(FlowError::InvalidSpec("mixture components differ in dimension".into()));
        }
        if weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
            return Err(FlowError::InvalidSpec("mixture weights must be positive".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
            return Err(FlowError::InvalidSpec(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { components, weights })
    }

    /// Equal-weight mixture `½ M(· + m) + ½ M(· - m)` along the first axis.
    pub fn symmetric_pair(dim: usize, offset: T, sigma: T) -> Result<Self> {
        let mut plus = vec![T::zero(); dim];
        plus[0] = offset;
        let minus: Vec<T> = plus.iter().map(|&x| -x).collect();
        Self::new(
            vec![GaussianSpec::new(minus, sigma)?, GaussianSpec::new(plus, sigma)?],
            vec![T::lit(0.5), T::lit(0.5)],
        )
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[GaussianSpec<T>] {
        &self.components
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn pdf(&self, v: &[T]) -> T {
        self.components
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (c, &w)| acc + w * c.pdf(v))
    }

    /// Log-density via log-sum-exp, finite far into the tails.
    pub fn log_pdf(&self, v: &[T]) -> T {
        let logs: Vec<T> = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| w.ln() + c.log_pdf(v))
            .collect();
        let top = logs.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
        top + logs.iter().map(|&x| (x - top).exp()).sum::<T>().ln()
    }

    fn map_components(&self, f: impl Fn(&GaussianSpec<T>) -> GaussianSpec<T>) -> Self {
        Self { components: self.components.iter().map(f).collect(), weights: self.weights.clone() }
    }

    pub fn second_moment(&self) -> T {
        self.components
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (c, &w)| acc + w * c.second_moment())
    }
}

/// Any analytic density model.
#[derive(Clone, Debug, PartialEq)]
pub enum DensitySpec<T> {
    Gaussian(GaussianSpec<T>),
    Mixture(MixtureSpec<T>),
}

impl<T> From<GaussianSpec<T>> for DensitySpec<T> {
    fn from(g: GaussianSpec<T>) -> Self {
        Self::Gaussian(g)
    }
}

impl<T> From<MixtureSpec<T>> for DensitySpec<T> {
    fn from(m: MixtureSpec<T>) -> Self {
        Self::Mixture(m)
    }
}

impl<T: Real> DensitySpec<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.dim(),
            Self::Mixture(m) => m.dim(),
        }
    }

    pub fn pdf(&self, v: &[T]) -> T {
        match self {
            Self::Gaussian(g) => g.pdf(v),
            Self::Mixture(m) => m.pdf(v),
        }
    }

    pub fn log_pdf(&self, v: &[T]) -> T {
        match self {
            Self::Gaussian(g) => g.log_pdf(v),
            Self::Mixture(m) => m.log_pdf(v),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian(_))
    }

    /// Exact solution of the heat equation at time `t` started from this density.
    pub fn heat_evolve(&self, t: T) -> Self {
        match self {
            Self::Gaussian(g) => Self::Gaussian(g.heat_evolve(t)),
            Self::Mixture(m) => Self::Mixture(m.map_components(|c| c.heat_evolve(t))),
        }
    }

    /// Exact dilation `aⁿ f(a v)`.
    pub fn dilate(&self, a: T) -> Self {
        match self {
            Self::Gaussian(g) => Self::Gaussian(g.dilate(a)),
            Self::Mixture(m) => Self::Mixture(m.map_components(|c| c.dilate(a))),
        }
    }

    /// Closed-form `∫ |v|² f`.
    pub fn second_moment(&self) -> T {
        match self {
            Self::Gaussian(g) => g.second_moment(),
            Self::Mixture(m) => m.second_moment(),
        }
    }

    /// Parses the JSON density schema:
    ///
    /// ```json
    /// {"type": "gaussian", "dim": 1, "sigma": 1.0, "mean": [0.0]}
    /// {"type": "mixture", "dim": 1, "weights": [0.5, 0.5],
    ///  "components": [{"sigma": 1.0, "mean": [-2.0]}, {"sigma": 1.0, "mean": [2.0]}]}
    /// ```
    ///
    /// `mean` defaults to the origin; component `dim` defaults to the mixture's.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| FlowError::InvalidSpec(e.to_string()))?;
        raw.into_spec()
    }
}

/// Exact heat evolution of an analytic spec.
pub fn heat_evolve_spec<T: Real>(spec: &DensitySpec<T>, t: T) -> DensitySpec<T> {
    spec.heat_evolve(t)
}

/// `H(M_σ) = (n/2) log(2πσ) + n/2`.
pub fn gaussian_entropy<T: Real>(sigma: T, n: usize) -> T {
    let half_n = T::from_usize_(n) * T::lit(0.5);
    half_n * (T::TAU() * sigma).ln() + half_n
}

/// `N(M_σ) = 2πeσ`.
pub fn gaussian_entropy_power<T: Real>(sigma: T) -> T {
    T::TAU() * T::E() * sigma
}

/// `I(M_σ) = n/σ`.
pub fn gaussian_fisher<T: Real>(sigma: T, n: usize) -> T {
    T::from_usize_(n) / sigma
}

/// `J(M_σ) = 2n/σ²` (the log-Hessian is `-Id/σ`).
pub fn gaussian_mckean_j<T: Real>(sigma: T, n: usize) -> T {
    T::lit(2.0) * T::from_usize_(n) / (sigma * sigma)
}

/// `Υ(M_σ) = exp((2/n) H(M_σ)) · I(M_σ)`, equal to `2πen` for every `σ`.
pub fn gaussian_upsilon<T: Real>(sigma: T, n: usize) -> T {
    let nn = T::from_usize_(n);
    (T::lit(2.0) / nn * gaussian_entropy(sigma, n)).exp() * gaussian_fisher(sigma, n)
}

/// `2πen`, the isoperimetric constant.
pub fn isoperimetric_constant<T: Real>(n: usize) -> T {
    T::TAU() * T::E() * T::from_usize_(n)
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawSpec {
    Gaussian {
        dim: usize,
        sigma: f64,
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
    Mixture {
        dim: usize,
        weights: Vec<f64>,
        components: Vec<RawComponent>,
    },
}

#[derive(Deserialize)]
struct RawComponent {
    #[serde(default, rename = "type")]
    kind: Option<String>,
    #[serde(default)]
    dim: Option<usize>,
    sigma: f64,
    #[serde(default)]
    mean: Option<Vec<f64>>,
}

fn raw_gaussian<T: Real>(dim: usize, sigma: f64, mean: Option<Vec<f64>>) -> Result<GaussianSpec<T>> {
    if dim == 0 {
        return Err(FlowError::InvalidSpec("dim must be positive".into()));
    }
    let mean = mean.unwrap_or_else(|| vec![0.0; dim]);
    if mean.len() != dim {
        return Err(FlowError::InvalidSpec(format!("mean has {} entries for dim {dim}", mean.len())));
    }
    GaussianSpec::new(mean.into_iter().map(T::lit).collect(), T::lit(sigma))
}

impl RawSpec {
    fn into_spec<T: Real>(self) -> Result<DensitySpec<T>> {
        match self {
            RawSpec::Gaussian { dim, sigma, mean } => Ok(raw_gaussian(dim, sigma, mean)?.into()),
            RawSpec::Mixture { dim, weights, components } => {
                let comps = components
                    .into_iter()
                    .map(|c| {
                        if let Some(kind) = c.kind.as_deref() {
                            if kind != "gaussian" {
                                return Err(FlowError::InvalidSpec(format!(
                                    "mixture component type {kind:?}, expected \"gaussian\""
                                )));
                            }
                        }
                        if c.dim.is_some_and(|d| d != dim) {
                            return Err(FlowError::InvalidSpec("component dim differs".into()));
                        }
                        raw_gaussian(dim, c.sigma, c.mean)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MixtureSpec::new(comps, weights.into_iter().map(T::lit).collect())?.into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn standard_normal_at_origin() {
        let g = GaussianSpec::<f64>::centered(1, 1.0).unwrap();
        assert!((g.pdf(&[0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn mixture_pdf_is_weighted_sum() {
        let a = GaussianSpec::new(vec![-1.0f64, 0.5], 0.7).unwrap();
        let b = GaussianSpec::new(vec![2.0, 0.0], 1.3).unwrap();
        let m = MixtureSpec::new(vec![a.clone(), b.clone()], vec![0.3, 0.7]).unwrap();
                for v in [[0.0f64, 0.0], [1.0, -2.0], [3.0, 0.1]] {
            let expect = 0.3 * a.pdf(&v) + 0.7 * b.pdf(&v);
            assert!((m.pdf(&v) - expect).abs() < 1e-16);
            assert!((m.log_pdf(&v) - expect.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn entropy_closed_forms() {
        assert!((gaussian_entropy::<f64>(1.0, 1) - 1.418_938_533_204_672_7).abs() < 1e-12);
        let bar = 1.0 / (2.0 * PI * E);
        for n in 1..=5 {
            assert!(gaussian_entropy::<f64>(bar, n).abs() < 1e-14);
            assert!((gaussian_fisher::<f64>(bar, n) - 2.0 * PI * E * n as f64).abs() < 1e-12);
        }
        let shift = gaussian_entropy::<f64>(3.0, 2) - gaussian_entropy::<f64>(1.0, 2);
        assert!((shift - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn fisher_scales_quadratically_under_dilation() {
        let (s, a) = (1.3f64, 2.5f64);
        let ratio = gaussian_fisher::<f64>(s / (a * a), 1) / gaussian_fisher::<f64>(s, 1);
        assert!((ratio - a * a).abs() < 1e-12);
        assert_eq!(gaussian_fisher::<f64>(1.0, 1), 1.0);
    }

    #[test]
    fn upsilon_is_scale_free() {
        assert!((gaussian_upsilon::<f64>(1.0, 1) - 17.079_468_445_347_132).abs() < 1e-12);
        assert!((gaussian_upsilon::<f64>(0.3, 2) - 34.158_936_890_694_264).abs() < 1e-12);
        for n in 1..=3 {
            let a = gaussian_upsilon::<f64>(0.7, n);
            let b = gaussian_upsilon::<f64>(7.0, n);
            assert!(((a - b) / a).abs() < 1e-14);
        }
    }

    #[test]
    fn heat_evolution_is_a_semigroup() {
        let m: DensitySpec<f64> = MixtureSpec::symmetric_pair(1, 2.0, 1.0).unwrap().into();
        assert_eq!(m.heat_evolve(0.0), m);
        assert_eq!(m.heat_evolve(0.25).heat_evolve(0.5), m.heat_evolve(0.75));
        let DensitySpec::Mixture(e) = m.heat_evolve(0.5) else { unreachable!() };
        assert!(e.components().iter().all(|c| c.sigma() == 2.0));
        // dH/dt along Gaussian evolution equals I(M_{σ+2t})
        let (s, t, dt) = (1.0f64, 0.5f64, 1e-4f64);
        let dh = (gaussian_entropy::<f64>(s + 2.0 * (t + dt), 1) - gaussian_entropy::<f64>(s + 2.0 * (t - dt), 1))
            / (2.0 * dt);
        assert!((dh - gaussian_fisher::<f64>(s + 2.0 * t, 1)).abs() < 1e-8);
    }

    #[test]
    fn parse_schema() {
        let g = DensitySpec::<f64>::from_json(r#"{"type":"gaussian","dim":2,"sigma":0.5}"#).unwrap();
        assert_eq!(g.dim(), 2);
        let m = DensitySpec::<f64>::from_json(
            r#"{"type":"mixture","dim":1,"weights":[0.5,0.5],
                "components":[{"type":"gaussian","sigma":1,"mean":[-2]},{"sigma":1,"mean":[2]}]}"#,
        )
        .unwrap();
        assert_eq!(m, MixtureSpec::symmetric_pair(1, 2.0, 1.0).unwrap().into());
        for bad in [
            "{",
            r#"{"type":"gaussian","dim":1,"sigma":-1}"#,
            r#"{"type":"gaussian","dim":1,"sigma":1,"mean":[0,0]}"#,
            r#"{"type":"mixture","dim":1,"weights":[0.5,0.6],"components":[{"sigma":1},{"sigma":1}]}"#,
            r#"{"type":"laplace","dim":1}"#,
        ] {
            assert!(DensitySpec::<f64>::from_json(bad).is_err(), "{bad}");
        }
    }
}
