//! Finite differences on density grids.
//!
//! [`gradient`] and [`hessian_log`] use second-order central differences.
//! The functionals evaluate derivatives of `log f` with the sixth-order
//! stencil ([`Stencil::Central6`]); any central stencil differentiates a
//! quadratic exactly, so Gaussian inputs are reproduced to rounding error.

use rayon::prelude::*;

use crate::error::{FlowError, Result};
use crate::grid::DensityGrid;
use crate::scalar::Real;

/// Relative floor below which `f` is treated as zero in log-space integrands.
pub const LOG_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Stencil {
    /// Second-order central differences, one-sided second order at the edges.
    Central2,
    /// Sixth-order central differences, falling back to `Central2` within
    /// three nodes of an edge.
    #[default]
    Central6,
}

const D1_C6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2_C6: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

/// First derivative of one line of samples.
pub(crate) fn d1_line<T: Real>(f: &[T], h: T, stencil: Stencil, out: &mut [T]) {
    let n = f.len();
    let two_h = h + h;
    out[0] = (-T::lit(3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / two_h;
    out[n - 1] = (T::lit(3.0) * f[n - 1] - T::lit(4.0) * f[n - 2] + f[n - 3]) / two_h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / two_h;
    }
    if stencil == Stencil::Central6 && n > 6 {
        let c = D1_C6.map(T::lit);
        for i in 3..n - 3 {
            out[i] = (c[0] * (f[i + 1] - f[i - 1])
                + c[1] * (f[i + 2] - f[i - 2])
                + c[2] * (f[i + 3] - f[i - 3]))
                / h;
        }
    }
}

/// Second derivative of one line of samples.
pub(crate) fn d2_line<T: Real>(f: &[T], h: T, stencil: Stencil, out: &mut [T]) {
    let n = f.len();
    let h2 = h * h;
    let (two, four, five) = (T::lit(2.0), T::lit(4.0), T::lit(5.0));
    out[0] = (two * f[0] - five * f[1] + four * f[2] - f[3]) / h2;
    out[n - 1] = (two * f[n - 1] - five * f[n - 2] + four * f[n - 3] - f[n - 4]) / h2;
    for i in 1..n - 1 {
        out[i] = (f[i - 1] - two * f[i] + f[i + 1]) / h2;
    }
    if stencil == Stencil::Central6 && n > 6 {
        let c = D2_C6.map(T::lit);
        for i in 3..n - 3 {
            out[i] = (c[0] * f[i]
                + c[1] * (f[i + 1] + f[i - 1])
                + c[2] * (f[i + 2] + f[i - 2])
                + c[3] * (f[i + 3] + f[i - 3]))
                / h2;
        }
    }
}

/// Applies `op` to every line of a row-major array along `axis`.
///
/// `op` receives an input line of length `shape[axis]` and fills an output
/// line of length `out_len`; the result has `shape[axis]` replaced by `out_len`.
pub(crate) fn map_lines<T, F>(values: &[T], shape: &[usize], axis: usize, out_len: usize, op: F) -> Vec<T>
where
    T: Real,
    F: Fn(&[T], &mut [T]) + Sync,
{
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    if inner == 1 {
        let mut out = vec![T::zero(); outer * out_len];
        out.par_chunks_mut(out_len)
            .zip(values.par_chunks(len))
            .for_each(|(o, line)| op(line, o));
        return out;
    }
    let lines: Vec<Vec<T>> = (0..outer * inner)
        .into_par_iter()
        .map(|li| {
            let (o, i) = (li / inner, li % inner);
            let base = o * len * inner + i;
            let line: Vec<T> = (0..len).map(|k| values[base + k * inner]).collect();
            let mut res = vec![T::zero(); out_len];
            op(&line, &mut res);
            res
        })
        .collect();
    let mut out = vec![T::zero(); outer * out_len * inner];
    for (li, line) in lines.iter().enumerate() {
        let (o, i) = (li / inner, li % inner);
        let base = o * out_len * inner + i;
        for (k, &v) in line.iter().enumerate() {
            out[base + k * inner] = v;
        }
    }
    out
}

/// Partial derivative of a node array along `axis`.
pub fn partial<T: Real>(values: &[T], shape: &[usize], axis: usize, h: T, stencil: Stencil) -> Vec<T> {
    map_lines(values, shape, axis, shape[axis], |l, o| d1_line(l, h, stencil, o))
}

/// Second partial derivative along a single axis.
pub fn partial2<T: Real>(values: &[T], shape: &[usize], axis: usize, h: T, stencil: Stencil) -> Vec<T> {
    map_lines(values, shape, axis, shape[axis], |l, o| d2_line(l, h, stencil, o))
}

/// `∇f` with second-order central differences, one component per axis.
pub fn gradient<T: Real>(g: &DensityGrid<T>) -> Vec<Vec<T>> {
    gradient_with(g, Stencil::Central2)
}

pub fn gradient_with<T: Real>(g: &DensityGrid<T>, stencil: Stencil) -> Vec<Vec<T>> {
    let d = g.domain();
    let shape = d.shape();
    (0..d.dim())
        .map(|ax| partial(g.values(), &shape, ax, d.spacing(ax), stencil))
        .collect()
}

/// `log max(f, floor · max f)` together with the mask `f ≥ floor · max f`.
pub fn floored_log<T: Real>(g: &DensityGrid<T>, floor: T) -> (Vec<T>, Vec<bool>) {
    let cut = floor * g.max_value();
    let logs = g.values().par_iter().map(|&v| v.max(cut).ln()).collect();
    let mask = g.values().iter().map(|&v| v >= cut && v > T::zero()).collect();
    (logs, mask)
}

impl Stencil {
    /// Half-width of the stencil in nodes.
    pub fn radius(self) -> usize {
        match self {
            Stencil::Central2 => 1,
            Stencil::Central6 => 3,
        }
    }
}

/// Shrinks `mask` so a node stays set only if every node in the surrounding
/// box of half-width `radius` is set.
pub(crate) fn erode(mask: &[bool], shape: &[usize], radius: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    for axis in 0..shape.len() {
        let len = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut next = cur.clone();
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                for k in 0..len {
                    let lo = k.saturating_sub(radius);
                    let hi = (k + radius).min(len - 1);
                    next[base + k * inner] = (lo..=hi).all(|j| cur[base + j * inner]);
                }
            }
        }
        cur = next;
    }
    cur
}

/// Hessian of `log f` on the unmasked nodes.
#[derive(Clone, Debug)]
pub struct LogHessian<T> {
    dim: usize,
    entries: Vec<Vec<T>>,
    mask: Vec<bool>,
}

impl<T: Real> LogHessian<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)`; symmetric storage.
    pub fn entry(&self, i: usize, j: usize) -> &[T] {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // (0,0) (0,1) (1,1)
        let slot = if self.dim == 1 { 0 } else { i + j };
        &self.entries[slot]
    }

    /// Nodes where `f` is above the floor and the entries are meaningful.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `Σ_{i,j} (∂²_{ij} log f)²` at node `idx`.
    pub fn frobenius_sq(&self, idx: usize) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let e = self.entry(i, j)[idx];
                acc = acc + e * e;
            }
        }
        acc
    }
}

/// `∂²_{ij} log f` by second differences of the floored logarithm.
///
/// The mask excludes nodes below the floor and nodes whose stencil touches one.
pub fn hessian_log<T: Real>(g: &DensityGrid<T>, floor: T) -> Result<LogHessian<T>> {
    hessian_log_with(g, floor, Stencil::Central2)
}

pub fn hessian_log_with<T: Real>(g: &DensityGrid<T>, floor: T, stencil: Stencil) -> Result<LogHessian<T>> {
    if !(floor > T::zero()) {
        return Err(FlowError::InvalidArgument(format!("log floor must be positive, got {floor}")));
    }
    let (logs, mask) = floored_log(g, floor);
    let mask = erode(&mask, &g.domain().shape(), stencil.radius());
    Ok(log_hessian_from_logs(g, &logs, mask, stencil))
}

pub(crate) fn log_hessian_from_logs<T: Real>(
    g: &DensityGrid<T>,
    logs: &[T],
    mask: Vec<bool>,
    stencil: Stencil,
) -> LogHessian<T> {
    let d = g.domain();
    let shape = d.shape();
    let entries = match d.dim() {
        1 => vec![partial2(logs, &shape, 0, d.spacing(0), stencil)],
        _ => {
            let (h0, h1) = (d.spacing(0), d.spacing(1));
            let dx = partial(logs, &shape, 0, h0, stencil);
            vec![
                partial2(logs, &shape, 0, h0, stencil),
                partial(&dx, &shape, 1, h1, stencil),
                partial2(logs, &shape, 1, h1, stencil),
            ]
        }
    };
    LogHessian { dim: d.dim(), entries, mask }
}
