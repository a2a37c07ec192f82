//! Densities sampled on uniform tensor grids over `[-L, L]^n`, `n ∈ {1, 2}`.
//!
//! Node `k` of an axis with half-width `L` and `N` points sits at
//! `-L + k h` with `h = 2L / (N - 1)`. Integrals use the trapezoid rule,
//! which is spectrally accurate for smooth densities that have decayed to
//! zero at the boundary. Every [`DensityGrid`] carries that decay as an
//! invariant: the two outermost layers of nodes hold at most
//! [`TAIL_TOL`] of the total mass.

use rayon::prelude::*;

use crate::analytic::DensitySpec;
use crate::error::{FlowError, Result};
use crate::scalar::Real;

/// Maximum fraction of mass allowed on the two outermost node layers.
pub const TAIL_TOL: f64 = 1e-10;
/// Smallest admissible point count per axis.
pub const MIN_POINTS: usize = 16;
/// Admissible dilation factors.
pub const SCALE_RANGE: (f64, f64) = (1e-3, 1e3);

/// Default 1D resolution: `L = 14`, 4096 points.
pub const DEFAULT_1D: (f64, usize) = (14.0, 4096);
/// Default 2D resolution: `L = 10`, 512 points per axis.
pub const DEFAULT_2D: (f64, usize) = (10.0, 512);

/// One axis of a [`GridDomain`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis<T> {
    pub half_width: T,
    pub points: usize,
}

impl<T: Real> Axis<T> {
    #[inline]
    pub fn spacing(&self) -> T {
        (self.half_width + self.half_width) / T::from_usize_(self.points - 1)
    }

    #[inline]
    pub fn node(&self, k: usize) -> T {
        -self.half_width + T::from_usize_(k) * self.spacing()
    }

    fn weights(&self) -> Vec<T> {
        let h = self.spacing();
        let half = h * T::lit(0.5);
        (0..self.points)
            .map(|k| if k == 0 || k + 1 == self.points { half } else { h })
            .collect()
    }
}

/// Uniform tensor grid over `[-L_1, L_1] × … × [-L_n, L_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain<T> {
    axes: Vec<Axis<T>>,
}

impl<T: Real> GridDomain<T> {
    pub fn new(axes: Vec<Axis<T>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(FlowError::InvalidGrid(format!(
                "dimension {} not supported (1 or 2)",
                axes.len()
            )));
        }
        for ax in &axes {
            if ax.points < MIN_POINTS {
                return Err(FlowError::InvalidGrid(format!(
                    "{} points per axis, need at least {MIN_POINTS}",
                    ax.points
                )));
            }
            if !(ax.half_width > T::zero()) || !ax.half_width.is_finite() {
                return Err(FlowError::InvalidGrid(format!(
                    "half_width must be positive, got {}",
                    ax.half_width
                )));
            }
        }
        Ok(Self { axes })
    }

    /// Isotropic grid with the same half-width and point count on every axis.
    pub fn uniform(dim: usize, half_width: T, points: usize) -> Result<Self> {
        Self::new(vec![Axis { half_width, points }; dim])
    }

    /// Isotropic grid with prescribed spacing `h`, so that `L = (points - 1) h / 2`.
    pub fn with_spacing(dim: usize, points: usize, h: T) -> Result<Self> {
        let half_width = h * T::from_usize_(points.saturating_sub(1)) * T::lit(0.5);
        Self::uniform(dim, half_width, points)
    }

    /// The default resolution for `dim`.
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::uniform(1, T::lit(DEFAULT_1D.0), DEFAULT_1D.1),
            2 => Self::uniform(2, T::lit(DEFAULT_2D.0), DEFAULT_2D.1),
            _ => Err(FlowError::InvalidGrid(format!("dimension {dim} not supported (1 or 2)"))),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, i: usize) -> &Axis<T> {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.axes[axis].spacing()
    }

    pub fn cell_volume(&self) -> T {
        self.axes.iter().fold(T::one(), |acc, a| acc * a.spacing())
    }

    /// Writes the coordinates of the node with row-major flat index `idx`.
    #[inline]
    pub fn coords_into(&self, idx: usize, out: &mut [T]) {
        match self.axes.len() {
            1 => out[0] = self.axes[0].node(idx),
            _ => {
                let n1 = self.axes[1].points;
                out[0] = self.axes[0].node(idx / n1);
                out[1] = self.axes[1].node(idx % n1);
            }
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        self.coords_into(idx, &mut v);
        v
    }

    /// Squared Euclidean norm of the node at `idx`.
    #[inline]
    pub fn radius_sq(&self, idx: usize) -> T {
        match self.axes.len() {
            1 => {
                let x = self.axes[0].node(idx);
                x * x
            }
            _ => {
                let n1 = self.axes[1].points;
                let x = self.axes[0].node(idx / n1);
                let y = self.axes[1].node(idx % n1);
                x * x + y * y
            }
        }
    }

    /// Trapezoid quadrature of `f(idx)` over all nodes.
    ///
    /// The summation order is fixed (row sums, then a sequential outer sum),
    /// so the result does not depend on the rayon thread count.
    pub fn integrate_by<F>(&self, f: F) -> T
    where
        F: Fn(usize) -> T + Sync,
    {
        let w0 = self.axes[0].weights();
        match self.axes.len() {
            1 => w0.iter().enumerate().map(|(i, &w)| w * f(i)).sum(),
            _ => {
                let w1 = self.axes[1].weights();
                let n1 = w1.len();
                let rows: Vec<T> = (0..w0.len())
                    .into_par_iter()
                    .map(|r| {
                        let base = r * n1;
                        w1.iter().enumerate().map(|(c, &w)| w * f(base + c)).sum()
                    })
                    .collect();
                rows.iter().zip(&w0).map(|(&s, &w)| s * w).sum()
            }
        }
    }

    /// Trapezoid quadrature of a node array.
    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.len());
        self.integrate_by(|i| values[i])
    }

    /// Whether flat index `idx` lies on one of the two outermost layers of any axis.
    pub fn is_boundary_layer(&self, idx: usize) -> bool {
        let edge = |k: usize, n: usize| k < 2 || k + 2 >= n;
        match self.axes.len() {
            1 => edge(idx, self.axes[0].points),
            _ => {
                let n1 = self.axes[1].points;
                edge(idx / n1, self.axes[0].points) || edge(idx % n1, n1)
            }
        }
    }

    /// Domain scaled by `1/a`: same point count, half-width `L/a`.
    pub fn contracted(&self, a: T) -> Result<Self> {
        Self::new(
            self.axes
                .iter()
                .map(|ax| Axis { half_width: ax.half_width / a, points: ax.points })
                .collect(),
        )
    }

    /// Domain extended by `pad[i]` nodes on each side of axis `i`, same spacing.
    pub fn padded(&self, pad: &[usize]) -> Result<Self> {
        Self::new(
            self.axes
                .iter()
                .zip(pad)
                .map(|(ax, &p)| Axis {
                    half_width: ax.half_width + T::from_usize_(p) * ax.spacing(),
                    points: ax.points + 2 * p,
                })
                .collect(),
        )
    }

    /// True when `other` has the same dimension and spacing per axis (relative 1e-12).
    pub fn same_spacing(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| {
                let (ha, hb) = (a.spacing(), b.spacing());
                (ha - hb).abs() <= T::lit(1e-12) * ha.max(hb)
            })
    }

    /// True when `other` has the same node set (point counts and half-widths).
    pub fn same_nodes(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| {
                a.points == b.points
                    && (a.half_width - b.half_width).abs()
                        <= T::lit(1e-12) * a.half_width.max(b.half_width)
            })
    }
}

/// Nonnegative density sampled on a [`GridDomain`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid<T> {
    domain: GridDomain<T>,
    values: Vec<T>,
    mass: T,
}

impl<T: Real> DensityGrid<T> {
    /// Validates `values` against `domain` and checks the tail invariant.
    pub fn from_values(domain: GridDomain<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(FlowError::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(FlowError::InvalidGrid(format!(
                "values must be finite and nonnegative, found {bad}"
            )));
        }
        let mass = domain.integrate(&values);
        if !(mass > T::zero()) {
            return Err(FlowError::InvalidGrid("all-zero density".into()));
        }
        let grid = Self { domain, values, mass };
        let tail = grid.tail_mass();
        let tol = T::lit(TAIL_TOL);
        if tail > tol * mass {
            return Err(FlowError::TailMass {
                tail: (tail / mass).to_f64().unwrap_or(f64::NAN),
                tol: TAIL_TOL,
            });
        }
        Ok(grid)
    }

    /// Samples `density` at every node.
    pub fn from_fn<F>(domain: GridDomain<T>, density: F) -> Result<Self>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let dim = domain.dim();
        let values = (0..domain.len())
            .into_par_iter()
            .map_init(
                || vec![T::zero(); dim],
                |buf, i| {
                    domain.coords_into(i, buf);
                    density(buf)
                },
            )
            .collect();
        Self::from_values(domain, values)
    }

    pub fn domain(&self) -> &GridDomain<T> {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Cached trapezoid mass `∫ f`.
    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// Quadrature mass on the two outermost node layers.
    pub fn tail_mass(&self) -> T {
        self.domain.integrate_by(|i| {
            if self.domain.is_boundary_layer(i) {
                self.values[i]
            } else {
                T::zero()
            }
        })
    }

    /// `∫ |v|² f(v) dv`.
    pub fn second_moment(&self) -> T {
        self.domain.integrate_by(|i| self.domain.radius_sq(i) * self.values[i])
    }

    /// `c · f` for `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(FlowError::InvalidArgument(format!("scale factor {c} must be positive")));
        }
        Ok(Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            mass: self.mass * c,
        })
    }

    /// Pointwise square `f²` on the same nodes.
    pub fn squared(&self) -> Result<Self> {
        Self::from_values(self.domain.clone(), self.values.iter().map(|&v| v * v).collect())
    }

    /// Returns `(f / μ, μ)` with `μ = ∫ f`.
    pub fn normalize(&self) -> Result<(Self, T)> {
        let mu = self.mass;
        if !(mu > T::zero()) {
            return Err(FlowError::ZeroMass);
        }
        let values: Vec<T> = self.values.iter().map(|&v| v / mu).collect();
        let mass = self.domain.integrate(&values);
        Ok((Self { domain: self.domain.clone(), values, mass }, mu))
    }

    /// Mass-preserving dilation `f_a(v) = aⁿ f(a v)`.
    ///
    /// The result lives on the domain contracted by `1/a` with the same point
    /// count, so node `k` of the new grid maps to node `k` of the old one and
    /// no interpolation is needed.
    pub fn dilate(&self, a: T) -> Result<Self> {
        let (lo, hi) = (T::lit(SCALE_RANGE.0), T::lit(SCALE_RANGE.1));
        if !(a >= lo && a <= hi) {
            return Err(FlowError::DegenerateScale(a.to_f64().unwrap_or(f64::NAN)));
        }
        let domain = self.domain.contracted(a)?;
        let factor = a.powi(self.dim() as i32);
        let values: Vec<T> = self.values.iter().map(|&v| v * factor).collect();
        let mass = domain.integrate(&values);
        Ok(Self { domain, values, mass })
    }

    /// `‖f − g‖_{L¹}` over a common node set.
    pub fn l1_distance(&self, other: &Self) -> Result<T> {
        if !self.domain.same_nodes(&other.domain) {
            return Err(FlowError::GridMismatch("l1_distance needs a common domain".into()));
        }
        Ok(self.domain.integrate_by(|i| (self.values[i] - other.values[i]).abs()))
    }
}

/// Samples an analytic density on `domain`.
pub fn build_grid<T: Real>(spec: &DensitySpec<T>, domain: GridDomain<T>) -> Result<DensityGrid<T>> {
    if spec.dim() != domain.dim() {
        return Err(FlowError::DimensionMismatch { expected: domain.dim(), found: spec.dim() });
    }
    DensityGrid::from_fn(domain, |v| spec.pdf(v))
}

/// Free-function form of [`DensityGrid::l1_distance`].
pub fn l1_distance<T: Real>(a: &DensityGrid<T>, b: &DensityGrid<T>) -> Result<T> {
    a.l1_distance(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{GaussianSpec, MixtureSpec};

    fn gauss(dim: usize, sigma: f64) -> DensitySpec<f64> {
        GaussianSpec::centered(dim, sigma).unwrap().into()
    }

    fn mixture_pm(m: f64, sigma: f64) -> DensitySpec<f64> {
        MixtureSpec::new(
            vec![
                GaussianSpec::new(vec![-m], sigma).unwrap(),
                GaussianSpec::new(vec![m], sigma).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap()
        .into()
    }

    #[test]
    fn gaussian_grid_has_unit_mass() {
        let d = GridDomain::uniform(1, 12.0, 4096).unwrap();
        let g = build_grid(&gauss(1, 1.0), d).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_grid_has_unit_mass() {
        let d = GridDomain::uniform(1, 14.0, 4096).unwrap();
        let g = build_grid(&mixture_pm(2.0, 1.0), d).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_domain_is_rejected_by_tail_check() {
        let d = GridDomain::uniform(1, 3.0, 64).unwrap();
        match build_grid(&gauss(1, 1.0), d) {
            Err(FlowError::TailMass { tail, .. }) => assert!(tail > 1e-4),
            other => panic!("expected TailMass, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let d = GridDomain::uniform(2, 10.0, 64).unwrap();
        assert!(matches!(
            build_grid(&gauss(1, 1.0), d),
            Err(FlowError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn domain_validation() {
        assert!(GridDomain::<f64>::uniform(1, 1.0, 15).is_err());
        assert!(GridDomain::<f64>::uniform(1, -1.0, 64).is_err());
        assert!(GridDomain::<f64>::uniform(3, 1.0, 64).is_err());
        let d = GridDomain::<f64>::uniform(1, 2.0, 5 * 4 + 1);
        assert!((d.unwrap().spacing(0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_values_rejected() {
        let d = GridDomain::<f64>::uniform(1, 5.0, 32).unwrap();
        assert!(DensityGrid::from_values(d.clone(), vec![0.0; 32]).is_err());
        let mut v = vec![0.0; 32];
        v[16] = f64::NAN;
        assert!(DensityGrid::from_values(d.clone(), v).is_err());
        let mut v = vec![0.0; 32];
        v[16] = -1.0;
        assert!(DensityGrid::from_values(d, v).is_err());
    }

    #[test]
    fn mass_is_linear() {
        let d = GridDomain::uniform(1, 14.0, 4096).unwrap();
        let g = build_grid(&gauss(1, 1.0), d).unwrap();
        let g2 = g.scaled(2.0).unwrap();
        assert!((g2.mass() - 2.0).abs() < 1e-12);
        assert!((g2.domain().integrate(g2.values()) - g2.mass()).abs() < 1e-12);
    }

    #[test]
    fn second_moments() {
        let g1 = build_grid(&gauss(1, 1.7), GridDomain::default_for_dim(1).unwrap()).unwrap();
        assert!((g1.second_moment() / 1.7 - 1.0).abs() < 1e-9);
        let g2 = build_grid(&gauss(2, 0.8), GridDomain::default_for_dim(2).unwrap()).unwrap();
        assert!((g2.second_moment() / 1.6 - 1.0).abs() < 1e-9);
        // law of total variance: σ + m²
        let gm = build_grid(&mixture_pm(1.5, 0.7), GridDomain::default_for_dim(1).unwrap()).unwrap();
        assert!((gm.second_moment() / (0.7 + 2.25) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dilation_identity_and_mass() {
        let g = build_grid(&mixture_pm(2.0, 1.0), GridDomain::default_for_dim(1).unwrap()).unwrap();
        assert_eq!(g.dilate(1.0).unwrap(), g);
        let g2 = g.dilate(2.0).unwrap();
        assert!((g2.mass() - g.mass()).abs() < 1e-10);
        assert!(matches!(g.dilate(1e-4), Err(FlowError::DegenerateScale(_))));
        assert!(matches!(g.dilate(2e3), Err(FlowError::DegenerateScale(_))));
    }

    #[test]
    fn dilated_gaussian_matches_rescaled_variance() {
        let g = build_grid(&gauss(1, 1.0), GridDomain::default_for_dim(1).unwrap()).unwrap();
        let a = 2.0;
        let ga = g.dilate(a).unwrap();
        let target = gauss(1, 1.0 / (a * a));
        let mut x = [0.0];
        for (i, &v) in ga.values().iter().enumerate() {
            ga.domain().coords_into(i, &mut x);
            assert!((v - target.pdf(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_round_trip() {
        let g = build_grid(&gauss(2, 0.7), GridDomain::uniform(2, 10.0, 128).unwrap()).unwrap();
        let back = g.dilate(3.0).unwrap().dilate(1.0 / 3.0).unwrap();
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn normalize_cases() {
        let g = build_grid(&gauss(1, 1.0), GridDomain::default_for_dim(1).unwrap()).unwrap();
        let (n, mu) = g.normalize().unwrap();
        assert!((mu - 1.0).abs() < 1e-12);
        assert!((n.mass() - 1.0).abs() < 1e-12);
        let (n2, mu2) = g.scaled(2.0).unwrap().normalize().unwrap();
        assert!((mu2 - 2.0).abs() < 1e-12);
        assert!(n2.l1_distance(&g).unwrap() < 1e-14);
    }

    #[test]
    fn l1_cases() {
        let g = build_grid(&gauss(1, 1.0), GridDomain::default_for_dim(1).unwrap()).unwrap();
        let g2 = g.scaled(2.0).unwrap();
        assert_eq!(g.l1_distance(&g).unwrap(), 0.0);
        assert!((g.l1_distance(&g2).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(g.l1_distance(&g2).unwrap(), g2.l1_distance(&g).unwrap());
        let other = build_grid(&gauss(1, 1.0), GridDomain::uniform(1, 13.0, 4096).unwrap()).unwrap();
        assert!(matches!(g.l1_distance(&other), Err(FlowError::GridMismatch(_))));
    }
}
