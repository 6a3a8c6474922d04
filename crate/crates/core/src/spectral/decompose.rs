use std::f64::consts::PI;

use rustfft::FftPlanner;

use super::{ComplexValue, SpectralCoordinate, SpectralDecomposition};
use crate::error::{check_exponent, GlnoError, Result};

/// Sample points `t_j = j T / K`, `j = 0..K`.
pub fn uniform_grid(k: usize, length: f64) -> Vec<f64> {
    (0..k).map(|j| j as f64 * length / k as f64).collect()
}

/// Signed DFT bins retained per decay rate: `0, 1, -1, 2, -2, ...`.
pub(crate) fn retained_bins(modes_per_sigma: usize) -> Vec<i64> {
    let mut bins = Vec::with_capacity(2 * modes_per_sigma.saturating_sub(1) + 1);
    if modes_per_sigma == 0 {
        return bins;
    }
    bins.push(0);
    for k in 1..modes_per_sigma as i64 {
        bins.push(k);
        bins.push(-k);
    }
    bins
}

/// Generalized Laplace decomposition of uniform samples on `[0, T)`.
///
/// For each decay rate `sigma` the weighted signal `e^{-sigma t_j} f(t_j)` is
/// transformed with an unnormalized forward DFT and scaled by `1/K`. Bin `k`
/// yields `e^{-sigma t} f = sum_k alpha_k e^{i 2 pi k t / T}`, i.e.
/// `f = sum_k alpha_k e^{-z_k t}` with `z_k = (-sigma, -2 pi k / T)`; that is
/// the coordinate recorded, so the decomposition synthesizes `f` exactly
/// under the `e^{-z t}` basis convention.
///
/// `modes_per_sigma = m` keeps bins `0, +-1, ..., +-(m-1)`.
pub fn decompose_uniform(
    samples: &[f64],
    length: f64,
    sigmas: &[f64],
    modes_per_sigma: usize,
) -> Result<SpectralDecomposition> {
    let k = samples.len();
    if sigmas.is_empty() {
        return Err(GlnoError::InvalidArgument("no decay rates given".into()));
    }
    if modes_per_sigma == 0 || k < 2 * modes_per_sigma {
        return Err(GlnoError::InvalidArgument(format!(
            "{k} samples cannot resolve {modes_per_sigma} modes per decay rate"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(GlnoError::InvalidArgument(format!(
            "domain length {length} must be positive"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(GlnoError::NonFinite("samples".into()));
    }
    if sigmas.iter().any(|s| !s.is_finite()) {
        return Err(GlnoError::NonFinite("decay rates".into()));
    }

    let grid = uniform_grid(k, length);
    let fft = FftPlanner::new().plan_fft_forward(k);
    let bins = retained_bins(modes_per_sigma);
    let scale = 1.0 / k as f64;

    let mut coords = Vec::with_capacity(sigmas.len() * bins.len());
    let mut coeffs = Vec::with_capacity(sigmas.len() * bins.len());
    let mut buf = vec![ComplexValue::new(0.0, 0.0); k];
    for &sigma in sigmas {
        check_exponent(sigma * grid[k - 1])?;
        for ((b, &t), &f) in buf.iter_mut().zip(&grid).zip(samples) {
            *b = ComplexValue::new((-sigma * t).exp() * f, 0.0);
        }
        fft.process(&mut buf);
        for &bin in &bins {
            let idx = bin.rem_euclid(k as i64) as usize;
            let omega = 2.0 * PI * bin as f64 / length;
            coords.push(SpectralCoordinate::new(-sigma, -omega));
            coeffs.push(buf[idx] * scale);
        }
    }
    SpectralDecomposition::new(coords, coeffs, length)
}

/// Direct `O(K^2)` DFT, `X_k = sum_j x_j e^{-2 pi i j k / K}` for every bin.
pub fn dft_direct(samples: &[ComplexValue]) -> Vec<ComplexValue> {
    let k = samples.len();
    (0..k)
        .map(|bin| {
            samples
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let phase = -2.0 * PI * ((bin * j) % k) as f64 / k as f64;
                    x * ComplexValue::new(phase.cos(), phase.sin())
                })
                .sum()
        })
        .collect()
}
