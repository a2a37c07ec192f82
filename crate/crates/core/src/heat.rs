//! Heat semigroup on density grids and time-derivative residuals.
//!
//! `f(·, t) = f * M_{2t}` is computed by direct convolution with the sampled
//! Gaussian kernel, one axis at a time (the isotropic kernel factorizes).
//! Each evaluation time is independent; no time stepping is involved.

use rayon::prelude::*;
use serde::Serialize;

use crate::diff::map_lines;
use crate::error::{FlowError, Result};
use crate::functionals::FunctionalSnapshot;
use crate::grid::DensityGrid;
use crate::scalar::Real;

/// Output padding per side, in kernel standard deviations `√(2t)`.
pub const PAD_SIGMAS: f64 = 6.0;
/// Kernel truncation radius in standard deviations; beyond it the kernel is below 1e-31 of its peak.
const KERNEL_SIGMAS: f64 = 12.0;

/// `f * M_{2t}` on a domain padded by `6√(2t)` per side.
pub fn evolve<T: Real>(g: &DensityGrid<T>, t: T) -> Result<DensityGrid<T>> {
    evolve_padded(g, t, t)
}

/// As [`evolve`], with padding sized for time `pad_time ≥ t` so that
/// evolutions to nearby times share one node set.
pub fn evolve_padded<T: Real>(g: &DensityGrid<T>, t: T, pad_time: T) -> Result<DensityGrid<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(FlowError::InvalidArgument(format!("evolution time must be positive, got {t}")));
    }
    let pad_time = pad_time.max(t);
    let d = g.domain();
    let pad_std = (pad_time + pad_time).sqrt();
    let std = (t + t).sqrt();
    let pads: Vec<usize> = (0..d.dim())
        .map(|ax| (T::lit(PAD_SIGMAS) * pad_std / d.spacing(ax)).ceil().to_usize().unwrap_or(0))
        .collect();
    let out_domain = d.padded(&pads)?;

    let mut shape = d.shape();
    let mut values = g.values().to_vec();
    for ax in 0..d.dim() {
        let h = d.spacing(ax);
        let n = shape[ax];
        let pad = pads[ax];
        let reach = (T::lit(KERNEL_SIGMAS) * std / h).ceil().to_usize().unwrap_or(usize::MAX);
        let reach = reach.min(n + pad);
        let norm = h / (T::lit(4.0) * T::PI() * t).sqrt();
        let four_t = T::lit(4.0) * t;
        let kernel: Vec<T> = (0..=reach)
            .map(|k| {
                let x = T::from_usize_(k) * h;
                norm * (-x * x / four_t).exp()
            })
            .collect();
        let out_len = n + 2 * pad;
        values = map_lines(&values, &shape, ax, out_len, |line, out| {
            for (j, o) in out.iter_mut().enumerate() {
                // output node j sits at input offset j - pad
                let centre = j as isize - pad as isize;
                let lo = (centre - reach as isize).max(0) as usize;
                let hi = (centre + reach as isize).min(n as isize - 1);
                if hi < lo as isize {
                    *o = T::zero();
                    continue;
                }
                let mut acc = T::zero();
                for (i, &f) in line.iter().enumerate().take(hi as usize + 1).skip(lo) {
                    acc = acc + f * kernel[(centre - i as isize).unsigned_abs()];
                }
                *o = acc;
            }
        });
        shape[ax] = out_len;
    }
    DensityGrid::from_values(out_domain, values)
}

/// Variance-normalized flow `F(v, t) = (1+2t)^{n/2} f(v √(1+2t), t)`.
pub fn rescaled_flow<T: Real>(g: &DensityGrid<T>, t: T) -> Result<DensityGrid<T>> {
    if t < T::zero() || !t.is_finite() {
        return Err(FlowError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    if t == T::zero() {
        return Ok(g.clone());
    }
    evolve(g, t)?.dilate((T::one() + t + t).sqrt())
}

/// Default time step for derivative probes: `1e-3 · max(t, 1)`, capped at `t/10`.
pub fn default_dt<T: Real>(t: T) -> T {
    (T::lit(1e-3) * t.max(T::one())).min(t / T::lit(10.0))
}

/// Central-difference derivatives of the functionals at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeProbe<T> {
    pub snapshot: FunctionalSnapshot<T>,
    pub dt: T,
    /// `|ΔH/Δt − I| / I`
    pub debruijn_residual: T,
    /// `|ΔI/Δt + J| / J`
    pub fisher_residual: T,
    /// `(N(t+dt) − 2N(t) + N(t−dt)) / dt²`
    pub n_second_diff: T,
    /// `(2/n) N (−J + (2/n) I²)`, the closed form of `d²N/dt²`
    pub n_second_derivative_identity: T,
}

/// Evaluates the functionals at `t − dt`, `t`, `t + dt` on a shared node set.
pub fn derivative_probe<T: Real>(g: &DensityGrid<T>, t: T, dt: T) -> Result<DerivativeProbe<T>> {
    if !(t > T::zero()) {
        return Err(FlowError::InvalidArgument(format!("probe time must be positive, got {t}")));
    }
    if !(dt > T::zero()) || dt > t / T::lit(10.0) {
        return Err(FlowError::InvalidArgument(format!("dt = {dt} must lie in (0, t/10] for t = {t}")));
    }
    let times = [t - dt, t, t + dt];
    let snaps = times
        .par_iter()
        .map(|&s| FunctionalSnapshot::evaluate(&evolve_padded(g, s, t + dt)?, s))
        .collect::<Result<Vec<_>>>()?;
    let (lo, mid, hi) = (snaps[0], snaps[1], snaps[2]);
    let two_dt = dt + dt;
    let dh = (hi.entropy - lo.entropy) / two_dt;
    let di = (hi.fisher - lo.fisher) / two_dt;
    let n = T::from_usize_(g.dim());
    let two_over_n = T::lit(2.0) / n;
    Ok(DerivativeProbe {
        snapshot: mid,
        dt,
        debruijn_residual: (dh - mid.fisher).abs() / mid.fisher,
        fisher_residual: (di + mid.mckean_j).abs() / mid.mckean_j,
        n_second_diff: (hi.entropy_power - mid.entropy_power - mid.entropy_power + lo.entropy_power)
            / (dt * dt),
        n_second_derivative_identity: two_over_n
            * mid.entropy_power
            * (two_over_n * mid.fisher * mid.fisher - mid.mckean_j),
    })
}

/// DeBruijn residual `|(H(t+dt) − H(t−dt))/(2dt) − I(t)| / I(t)`.
pub fn debruijn_check<T: Real>(g: &DensityGrid<T>, t: T, dt: T) -> Result<T> {
    Ok(derivative_probe(g, t, dt)?.debruijn_residual)
}

/// Residual of `dI/dt = −J`: `|(I(t+dt) − I(t−dt))/(2dt) + J(t)| / J(t)`.
pub fn fisher_derivative_check<T: Real>(g: &DensityGrid<T>, t: T, dt: T) -> Result<T> {
    Ok(derivative_probe(g, t, dt)?.fisher_residual)
}

/// Second central difference of the entropy power in time.
pub fn concavity_check<T: Real>(g: &DensityGrid<T>, t: T, dt: T) -> Result<T> {
    Ok(derivative_probe(g, t, dt)?.n_second_diff)
}

/// Functionals along the heat flow at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowTrace<T> {
    pub times: Vec<T>,
    pub snapshots: Vec<FunctionalSnapshot<T>>,
    pub debruijn_residual: Vec<Option<T>>,
    pub fisher_residual: Vec<Option<T>>,
    pub n_second_diff: Vec<Option<T>>,
}

fn validate_times<T: Real>(times: &[T]) -> Result<()> {
    if times.len() < 3 {
        return Err(FlowError::InvalidArgument(format!("need at least 3 times, got {}", times.len())));
    }
    if !(times[0] > T::zero()) {
        return Err(FlowError::InvalidArgument("flow times must be positive".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FlowError::InvalidArgument("flow times must be strictly increasing".into()));
    }
    Ok(())
}

/// Snapshots at `times`; residuals at interior times by three-point
/// differences over the (possibly non-uniform) time grid itself.
pub fn flow_trace<T: Real>(g: &DensityGrid<T>, times: &[T]) -> Result<FlowTrace<T>> {
    validate_times(times)?;
    let snapshots = times
        .par_iter()
        .map(|&t| FunctionalSnapshot::evaluate(&evolve(g, t)?, t))
        .collect::<Result<Vec<_>>>()?;
    let m = times.len();
    let mut debruijn = vec![None; m];
    let mut fisher_res = vec![None; m];
    let mut second = vec![None; m];
    for k in 1..m - 1 {
        let (h1, h2) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let (a, b, c) = (&snapshots[k - 1], &snapshots[k], &snapshots[k + 1]);
        let deriv = |fa: T, fb: T, fc: T| {
            -h2 / (h1 * (h1 + h2)) * fa + (h2 - h1) / (h1 * h2) * fb + h1 / (h2 * (h1 + h2)) * fc
        };
        let dh = deriv(a.entropy, b.entropy, c.entropy);
        let di = deriv(a.fisher, b.fisher, c.fisher);
        debruijn[k] = Some((dh - b.fisher).abs() / b.fisher);
        fisher_res[k] = Some((di + b.mckean_j).abs() / b.mckean_j);
        second[k] = Some(
            T::lit(2.0)
                * (a.entropy_power / (h1 * (h1 + h2)) - b.entropy_power / (h1 * h2)
                    + c.entropy_power / (h2 * (h1 + h2))),
        );
    }
    Ok(FlowTrace {
        times: times.to_vec(),
        snapshots,
        debruijn_residual: debruijn,
        fisher_residual: fisher_res,
        n_second_diff: second,
    })
}

/// Snapshots at `times` with residuals from a [`derivative_probe`] at every
/// time (step `dt`, or [`default_dt`] per time when `None`).
pub fn flow_trace_probed<T: Real>(g: &DensityGrid<T>, times: &[T], dt: Option<T>) -> Result<FlowTrace<T>> {
    validate_times(times)?;
    let probes = times
        .iter()
        .map(|&t| derivative_probe(g, t, dt.unwrap_or_else(|| default_dt(t))))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrace {
        times: times.to_vec(),
        snapshots: probes.iter().map(|p| p.snapshot).collect(),
        debruijn_residual: probes.iter().map(|p| Some(p.debruijn_residual)).collect(),
        fisher_residual: probes.iter().map(|p| Some(p.fisher_residual)).collect(),
        n_second_diff: probes.iter().map(|p| Some(p.n_second_diff)).collect(),
    })
}
