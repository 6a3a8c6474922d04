use super::{
    decompose_uniform, pole_residue_product, uniform_grid, ComplexValue, PoleResidueKernel,
    SpectralProduct,
};
use crate::error::{check_exponent, GlnoError, Result};

/// Complex inverse transform `sum_n b_n e^{mu_n t} + sum_i a_i e^{-z_i t}` on `grid`.
pub fn reconstruct_time_complex(prod: &SpectralProduct, grid: &[f64]) -> Result<Vec<ComplexValue>> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(GlnoError::NonFinite("reconstruction grid".into()));
    }
    let t_max = grid.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    for (mu, _) in &prod.transient {
        check_exponent(mu.re * t_max)?;
    }
    for (z, _) in &prod.steady {
        check_exponent(z.sigma * t_max)?;
    }

    Ok(grid
        .iter()
        .map(|&t| {
            let mut acc = ComplexValue::new(0.0, 0.0);
            for (mu, b) in &prod.transient {
                acc += b * (mu * t).exp();
            }
            for (z, a) in &prod.steady {
                acc += a * (-z.as_complex() * t).exp();
            }
            acc
        })
        .collect())
}

/// Real part of [`reconstruct_time_complex`].
pub fn reconstruct_time(prod: &SpectralProduct, grid: &[f64]) -> Result<Vec<f64>> {
    Ok(reconstruct_time_complex(prod, grid)?
        .into_iter()
        .map(|c| c.re)
        .collect())
}

/// Decompose with the given decay rates, apply the kernel, reconstruct on the
/// sample grid.
pub fn glno_forward(
    samples: &[f64],
    length: f64,
    sigmas: &[f64],
    kernel: &PoleResidueKernel,
    modes_per_sigma: usize,
) -> Result<Vec<f64>> {
    let decomposition = decompose_uniform(samples, length, sigmas, modes_per_sigma)?;
    let product = pole_residue_product(&decomposition, kernel)?;
    reconstruct_time(&product, &uniform_grid(samples.len(), length))
}

/// Classic Laplace neural operator path: the generalized path with a single
/// zero decay rate.
pub fn lno_forward(
    samples: &[f64],
    length: f64,
    kernel: &PoleResidueKernel,
    modes: usize,
) -> Result<Vec<f64>> {
    glno_forward(samples, length, &[0.0], kernel, modes)
}
