//! Both sides of each inequality in the entropy-power chain, with slack.
//!
//! Every report is oriented so that `slack ≥ −tol` means the inequality
//! holds; `lhs` and `rhs` are stored as evaluated, whatever the direction of
//! the original inequality.

use std::fmt;

use serde::Serialize;

use crate::analytic::{isoperimetric_constant, GaussianSpec};
use crate::convolve::convolve;
use crate::error::{FlowError, Result};
use crate::functionals::{
    dirichlet_energy, entropy, entropy_power, entropy_unnormalized, fisher, kl_divergence,
    mckean_j, power_from_entropy, require_unit_mass, unit_mass_tol, upsilon,
};
use crate::grid::{build_grid, DensityGrid};
use crate::scalar::Real;

/// Admissible dilation factors for the scaling-law checks.
pub const SCALING_RANGE: (f64, f64) = (0.25, 4.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InequalityTag {
    Epi,
    Key,
    Iso,
    Lsi,
    LsiRemainder,
    Ck,
    Nash,
    NashGeneral,
    GenFisher,
    JensenStep,
    ScalingH,
    ScalingI,
    ScalingUpsilon,
}

impl InequalityTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Epi => "EPI",
            Self::Key => "KEY",
            Self::Iso => "ISO",
            Self::Lsi => "LSI",
            Self::LsiRemainder => "LSI_REMAINDER",
            Self::Ck => "CK",
            Self::Nash => "NASH",
            Self::NashGeneral => "NASH_GENERAL",
            Self::GenFisher => "GEN_FISHER",
            Self::JensenStep => "JENSEN_STEP",
            Self::ScalingH => "SCALING_H",
            Self::ScalingI => "SCALING_I",
            Self::ScalingUpsilon => "SCALING_UPSILON",
        }
    }
}

impl fmt::Display for InequalityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport<T> {
    pub tag: InequalityTag,
    pub lhs: T,
    pub rhs: T,
    pub slack: T,
    pub tol: T,
    pub pass: bool,
    pub meta: String,
}

impl<T: Real> InequalityReport<T> {
    pub fn new(tag: InequalityTag, lhs: T, rhs: T, slack: T, tol: T, meta: impl Into<String>) -> Self {
        Self { tag, lhs, rhs, slack, tol, pass: slack >= -tol, meta: meta.into() }
    }
}

/// Nash report with the ratio and the `I(g²) = 4∫|∇g|²` identity residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NashReport<T> {
    pub report: InequalityReport<T>,
    /// `lhs / rhs`; `e/4` for one-dimensional Gaussians.
    pub ratio: T,
    /// `|I(g²) − 4∫|∇g|²| / I(g²)`
    pub identity_residual: T,
}

/// Tolerances per check. "relative" entries are multiplied by the natural
/// scale of the check before comparison with the slack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// relative to `N(g1) + N(g2)`
    pub epi: T,
    /// relative to `J`
    pub key: T,
    /// relative to `2πen`
    pub iso: T,
    /// absolute (both sides are `n/2` at the matched Gaussian)
    pub lsi: T,
    /// absolute
    pub lsi_remainder: T,
    /// absolute
    pub ck: T,
    /// relative to the right-hand side
    pub gen_fisher: T,
    /// absolute
    pub jensen: T,
    /// relative to the right-hand side
    pub nash: T,
    /// absolute on the entropy shift, relative on the two ratios
    pub scaling: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            epi: T::lit(1e-5),
            key: T::lit(1e-4),
            iso: T::lit(1e-5),
            lsi: T::lit(1e-5),
            lsi_remainder: T::lit(1e-6),
            ck: T::lit(1e-8),
            gen_fisher: T::lit(1e-5),
            jensen: T::lit(1e-9),
            nash: T::lit(1e-5),
            scaling: T::lit(1e-5),
        }
    }
}

impl<T: Real> Tolerances<T> {
    /// Every entry set to `tol`.
    pub fn uniform(tol: T) -> Self {
        Self {
            epi: tol,
            key: tol,
            iso: tol,
            lsi: tol,
            lsi_remainder: tol,
            ck: tol,
            gen_fisher: tol,
            jensen: tol,
            nash: tol,
            scaling: tol,
        }
    }
}

/// Runs the checks against a fixed set of tolerances.
#[derive(Clone, Debug)]
pub struct InequalitySuite<T> {
    pub tol: Tolerances<T>,
}

impl<T: Real> Default for InequalitySuite<T> {
    fn default() -> Self {
        Self { tol: Tolerances::default() }
    }
}

fn n_of<T: Real>(g: &DensityGrid<T>) -> T {
    T::from_usize_(g.dim())
}

fn reference_gaussian<T: Real>(g: &DensityGrid<T>, sigma: T) -> Result<GaussianSpec<T>> {
    if !(sigma > T::zero()) {
        return Err(FlowError::InvalidArgument(format!("reference sigma must be positive, got {sigma}")));
    }
    GaussianSpec::centered(g.dim(), sigma)
}

impl<T: Real> InequalitySuite<T> {
    pub fn new(tol: Tolerances<T>) -> Self {
        Self { tol }
    }

    /// Entropy-power inequality `N(g1 * g2) ≥ N(g1) + N(g2)`.
    pub fn check_epi(&self, g1: &DensityGrid<T>, g2: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        let (n1, n2) = (entropy_power(g1)?, entropy_power(g2)?);
        let lhs = entropy_power(&convolve(g1, g2)?)?;
        let rhs = n1 + n2;
        Ok(InequalityReport::new(InequalityTag::Epi, lhs, rhs, lhs - rhs, self.tol.epi * rhs, "N(g1*g2) >= N(g1)+N(g2)"))
    }

    /// `J(f) ≥ (2/n) I(f)²`, equality exactly at Gaussians.
    pub fn check_key_inequality(&self, g: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        require_unit_mass(g)?;
        let j = mckean_j(g);
        let i = fisher(g);
        let rhs = T::lit(2.0) / n_of(g) * i * i;
        Ok(InequalityReport::new(InequalityTag::Key, j, rhs, j - rhs, self.tol.key * j, "J >= (2/n) I^2"))
    }

    /// Isoperimetric inequality for entropies `N(f) I(f) ≥ 2πen`.
    pub fn check_isoperimetric(&self, g: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        let lhs = upsilon(g)?;
        let rhs = isoperimetric_constant::<T>(g.dim());
        Ok(InequalityReport::new(InequalityTag::Iso, lhs, rhs, lhs - rhs, self.tol.iso * rhs, "N*I >= 2*pi*e*n"))
    }

    /// Logarithmic Sobolev inequality
    /// `∫ f log f + n + (n/2) log 2πσ ≤ (σ/2) I(f)`.
    pub fn check_lsi(&self, g: &DensityGrid<T>, sigma: T) -> Result<InequalityReport<T>> {
        let h = entropy(g)?;
        reference_gaussian(g, sigma)?;
        let n = n_of(g);
        let lhs = sigma * T::lit(0.5) * fisher(g);
        let rhs = -h + n + n * T::lit(0.5) * (T::TAU() * sigma).ln();
        Ok(InequalityReport::new(
            InequalityTag::Lsi,
            lhs,
            rhs,
            lhs - rhs,
            self.tol.lsi,
            format!("(s/2) I >= int f log f + n + (n/2) log(2 pi s), s = {sigma:e}"),
        ))
    }

    /// Csiszár–Kullback `2 KL(f ‖ M_σ) ≥ ‖f − M_σ‖₁²`.
    pub fn check_ck(&self, g: &DensityGrid<T>, sigma: T) -> Result<InequalityReport<T>> {
        let reference = reference_gaussian(g, sigma)?;
        let lhs = T::lit(2.0) * kl_divergence(g, &reference)?;
        let l1 = l1_to_gaussian(g, &reference)?;
        let rhs = l1 * l1;
        Ok(InequalityReport::new(
            InequalityTag::Ck,
            lhs,
            rhs,
            lhs - rhs,
            self.tol.ck,
            format!("2 KL(f|M_s) >= |f - M_s|_1^2, s = {sigma:e}"),
        ))
    }

    /// LSI with remainder: with `σ = ∫|v|² f / n`, the LSI deficit
    /// `(σ/2) I − ∫ f log f − n − (n/2) log 2πσ` is at least `(n²/8) ‖f − M_σ‖₁⁴`.
    pub fn check_improved_lsi(&self, g: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        let h = entropy(g)?;
        let n = n_of(g);
        let sigma = g.second_moment() / n;
        let reference = reference_gaussian(g, sigma)?;
        let lhs = sigma * T::lit(0.5) * fisher(g) + h - n - n * T::lit(0.5) * (T::TAU() * sigma).ln();
        let l1 = l1_to_gaussian(g, &reference)?;
        let rhs = n * n / T::lit(8.0) * l1 * l1 * l1 * l1;
        Ok(InequalityReport::new(
            InequalityTag::LsiRemainder,
            lhs,
            rhs,
            lhs - rhs,
            self.tol.lsi_remainder,
            format!("LSI deficit >= (n^2/8) |f - M_s|_1^4, s = {sigma:e}"),
        ))
    }

    /// Fisher bound for a density of any mass `μ`:
    /// `I(f) ≥ 2πen μ exp(−(2/(nμ)) (H(f) + μ log μ))`, with
    /// `H(f) = μ H(f/μ) − μ log μ`.
    pub fn check_gen_fisher(&self, g: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        let (phi, mu) = g.normalize()?;
        let n = n_of(g);
        let h_f = mu * entropy(&phi)? - mu * mu.ln();
        let lhs = fisher(g);
        let rhs = isoperimetric_constant::<T>(g.dim())
            * mu
            * (-(T::lit(2.0) / (n * mu)) * (h_f + mu * mu.ln())).exp();
        Ok(InequalityReport::new(
            InequalityTag::GenFisher,
            lhs,
            rhs,
            lhs - rhs,
            self.tol.gen_fisher * rhs,
            format!("I(f) >= 2 pi e n mu exp(-2/(n mu) (H(f) + mu log mu)), mu = {mu:e}"),
        ))
    }

    /// Jensen step `−H(g²) ≥ 2 (∫g²) log ∫g²` for a unit-mass `g`.
    pub fn check_jensen_step(&self, g: &DensityGrid<T>) -> Result<InequalityReport<T>> {
        require_unit_mass(g)?;
        let sq = g.squared()?;
        let lhs = -entropy_unnormalized(&sq);
        let m2 = sq.mass();
        let rhs = T::lit(2.0) * m2 * m2.ln();
        Ok(InequalityReport::new(
            InequalityTag::JensenStep,
            lhs,
            rhs,
            lhs - rhs,
            self.tol.jensen,
            "-H(g^2) >= 2 (int g^2) log(int g^2)",
        ))
    }

    /// Nash's inequality
    /// `(∫g²)^{1+2/n} ≤ (2/(πen)) (∫g)^{4/n} ∫|∇g|²`.
    ///
    /// Tagged `NASH` for unit-mass input and `NASH_GENERAL` otherwise.
    pub fn check_nash(&self, g: &DensityGrid<T>) -> Result<NashReport<T>> {
        let mass = g.mass();
        if !(mass > T::zero()) {
            return Err(FlowError::ZeroMass);
        }
        let n = n_of(g);
        let sq = g.squared()?;
        let m2 = sq.mass();
        let energy = dirichlet_energy(g);
        let lhs = m2.powf(T::one() + T::lit(2.0) / n);
        let rhs = T::lit(2.0) / (T::PI() * T::E() * n) * mass.powf(T::lit(4.0) / n) * energy;
        let fisher_sq = fisher(&sq);
        let four_energy = T::lit(4.0) * energy;
        let identity_residual = (fisher_sq - four_energy).abs() / fisher_sq;
        let unit = (mass - T::one()).abs() <= unit_mass_tol();
        let tag = if unit { InequalityTag::Nash } else { InequalityTag::NashGeneral };
        let report = InequalityReport::new(
            tag,
            lhs,
            rhs,
            rhs - lhs,
            self.tol.nash * rhs,
            format!("(int g^2)^(1+2/n) <= 2/(pi e n) (int g)^(4/n) int |grad g|^2, mass = {mass:e}"),
        );
        Ok(NashReport { report, ratio: lhs / rhs, identity_residual })
    }

    /// Scaling laws under `g ↦ g_a`: entropy shift, Fisher ratio and `Υ` invariance.
    ///
    /// Each report's slack is `−|deviation|`, so it passes iff the deviation is within `tol`.
    pub fn check_scaling_laws(&self, g: &DensityGrid<T>, a: T) -> Result<Vec<InequalityReport<T>>> {
        let (lo, hi) = (T::lit(SCALING_RANGE.0), T::lit(SCALING_RANGE.1));
        if !(a >= lo && a <= hi) {
            return Err(FlowError::DegenerateScale(a.to_f64().unwrap_or(f64::NAN)));
        }
        let ga = g.dilate(a)?;
        let n = n_of(g);
        let (h, ha) = (entropy(g)?, entropy(&ga)?);
        let (i, ia) = (fisher(g), fisher(&ga));
        let (u, ua) = (power_from_entropy(h, g.dim()) * i, power_from_entropy(ha, g.dim()) * ia);
        let shift_rhs = h - n * a.ln();
        let a2 = a * a;
        let fisher_ratio = ia / i;
        let upsilon_ratio = ua / u;
        let tol = self.tol.scaling;
        let meta = format!("a = {a:e}");
        Ok(vec![
            InequalityReport::new(InequalityTag::ScalingH, ha, shift_rhs, T::zero() - (ha - shift_rhs).abs(), tol, meta.clone()),
            InequalityReport::new(
                InequalityTag::ScalingI,
                fisher_ratio,
                a2,
                T::zero() - (fisher_ratio / a2 - T::one()).abs(),
                tol,
                meta.clone(),
            ),
            InequalityReport::new(
                InequalityTag::ScalingUpsilon,
                upsilon_ratio,
                T::one(),
                T::zero() - (upsilon_ratio - T::one()).abs(),
                tol,
                meta,
            ),
        ])
    }

    /// Every check applicable to a single unit-mass density, in a fixed order.
    ///
    /// The reference variance for LSI and CK is `∫|v|² f / n`; non-unit-mass
    /// forms use `0.7 g` (Fisher bound) and `3 g` (Nash).
    pub fn run_all(&self, g: &DensityGrid<T>) -> Result<Vec<InequalityReport<T>>> {
        require_unit_mass(g)?;
        let sigma = g.second_moment() / n_of(g);
        let mut out = vec![
            self.check_epi(g, g)?,
            self.check_key_inequality(g)?,
            self.check_isoperimetric(g)?,
            self.check_lsi(g, sigma)?,
            self.check_improved_lsi(g)?,
            self.check_ck(g, sigma)?,
            self.check_gen_fisher(g)?,
            self.check_gen_fisher(&g.scaled(T::lit(0.7))?)?,
            self.check_jensen_step(g)?,
            self.check_nash(g)?.report,
            self.check_nash(&g.scaled(T::lit(3.0))?)?.report,
        ];
        out.extend(self.check_scaling_laws(g, T::lit(2.0))?);
        Ok(out)
    }
}

fn l1_to_gaussian<T: Real>(g: &DensityGrid<T>, reference: &GaussianSpec<T>) -> Result<T> {
    let m = build_grid(&reference.clone().into(), g.domain().clone())?;
    g.l1_distance(&m)
}
