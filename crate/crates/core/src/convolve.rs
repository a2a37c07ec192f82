//! Linear (non-circular) convolution of density grids.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{FlowError, Result};
use crate::grid::{Axis, DensityGrid, GridDomain};
use crate::scalar::Real;

/// `(f * g)(v) = ∫ f(w) g(v - w) dw` on the Minkowski-sum domain.
///
/// Both grids must share dimension and spacing. The output axis has
/// `N₁ + N₂ − 1` points and half-width `L₁ + L₂`. One-dimensional inputs use
/// the direct sum; two-dimensional inputs go through a zero-padded FFT, with
/// rounding noise below zero clamped away.
pub fn convolve<T: Real>(a: &DensityGrid<T>, b: &DensityGrid<T>) -> Result<DensityGrid<T>> {
    let (da, db) = (a.domain(), b.domain());
    if !da.same_spacing(db) {
        return Err(FlowError::GridMismatch(
            "convolution needs equal dimension and spacing".into(),
        ));
    }
    let axes: Vec<Axis<T>> = da
        .axes()
        .iter()
        .zip(db.axes())
        .map(|(x, y)| Axis { half_width: x.half_width + y.half_width, points: x.points + y.points - 1 })
        .collect();
    let out_domain = GridDomain::new(axes)?;
    let cell = da.cell_volume();
    let values = match da.dim() {
        1 => direct_1d(a.values(), b.values(), cell),
        _ => fft_2d(a.values(), &da.shape(), b.values(), &db.shape(), cell),
    };
    DensityGrid::from_values(out_domain, values)
}

fn direct_1d<T: Real>(a: &[T], b: &[T], h: T) -> Vec<T> {
    let (na, nb) = (a.len(), b.len());
    (0..na + nb - 1)
        .into_par_iter()
        .map(|k| {
            let lo = k.saturating_sub(nb - 1);
            let hi = k.min(na - 1);
            let mut acc = T::zero();
            for i in lo..=hi {
                acc = acc + a[i] * b[k - i];
            }
            acc * h
        })
        .collect()
}

fn fft_rows<T: Real>(data: &mut [Complex<T>], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let fft = if inverse { planner.plan_fft_inverse(cols) } else { planner.plan_fft_forward(cols) };
    data.par_chunks_mut(cols).for_each(|row| fft.process(row));
    debug_assert_eq!(data.len(), rows * cols);
}

fn transpose<T: Copy + Send + Sync>(data: &[T], rows: usize, cols: usize) -> Vec<T> {
    (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let (c, r) = (k / rows, k % rows);
            data[r * cols + c]
        })
        .collect()
}

fn fft_2d_inplace<T: Real>(data: Vec<Complex<T>>, rows: usize, cols: usize, inverse: bool) -> Vec<Complex<T>> {
    let mut data = data;
    fft_rows(&mut data, rows, cols, inverse);
    let mut t = transpose(&data, rows, cols);
    fft_rows(&mut t, cols, rows, inverse);
    transpose(&t, cols, rows)
}

fn fft_2d<T: Real>(a: &[T], sa: &[usize], b: &[T], sb: &[usize], cell: T) -> Vec<T> {
    let (rows, cols) = (sa[0] + sb[0] - 1, sa[1] + sb[1] - 1);
    let embed = |src: &[T], shape: &[usize]| {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); rows * cols];
        for r in 0..shape[0] {
            for c in 0..shape[1] {
                buf[r * cols + c].re = src[r * shape[1] + c];
            }
        }
        fft_2d_inplace(buf, rows, cols, false)
    };
    let fa = embed(a, sa);
    let fb = embed(b, sb);
    let prod: Vec<Complex<T>> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let back = fft_2d_inplace(prod, rows, cols, true);
    let scale = cell / T::from_usize_(rows * cols);
    back.iter().map(|z| (z.re * scale).max(T::zero())).collect()
}
