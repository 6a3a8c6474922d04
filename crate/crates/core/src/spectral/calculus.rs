use super::{
    ComplexValue, PoleResidueKernel, SpectralCoordinate, SpectralDecomposition, SpectralProduct,
};
use crate::error::{GlnoError, Result, POLE_TOLERANCE};

/// Laplace transform of `e^{-z t}`, i.e. `1 / (s + z)`.
pub fn laplace_of_basis(z: SpectralCoordinate, s: ComplexValue) -> Result<ComplexValue> {
    let d = s + z.as_complex();
    if d.norm() <= POLE_TOLERANCE {
        return Err(GlnoError::PoleCollision {
            what: "s + z".into(),
            distance: d.norm(),
        });
    }
    Ok(d.inv())
}

/// `F(s) = sum_i alpha_i / (s + z_i)`.
pub fn eval_decomposition(f: &SpectralDecomposition, s: ComplexValue) -> Result<ComplexValue> {
    let mut acc = ComplexValue::new(0.0, 0.0);
    for (z, alpha) in f.coords().iter().zip(f.coeffs()) {
        acc += alpha * laplace_of_basis(*z, s)?;
    }
    Ok(acc)
}

/// Residues of `F(s) K(s)` by the limit formulas
/// `transient_n = beta_n F(mu_n)` and `steady_i = alpha_i K(-z_i)`.
pub fn pole_residue_product(
    f: &SpectralDecomposition,
    kernel: &PoleResidueKernel,
) -> Result<SpectralProduct> {
    // 1 / (mu_n + z_i), shared by both residue families.
    let n_poles = kernel.len();
    let m = f.len();
    let mut inv = vec![ComplexValue::new(0.0, 0.0); n_poles * m];
    for (n, mu) in kernel.poles().iter().enumerate() {
        for (i, z) in f.coords().iter().enumerate() {
            let d = mu + z.as_complex();
            if d.norm() <= POLE_TOLERANCE {
                return Err(GlnoError::PoleCollision {
                    what: format!("mu_{n} + z_{i}"),
                    distance: d.norm(),
                });
            }
            inv[n * m + i] = d.inv();
        }
    }

    let transient = kernel
        .poles()
        .iter()
        .zip(kernel.residues())
        .enumerate()
        .map(|(n, (mu, beta))| {
            let f_at_mu: ComplexValue = f
                .coeffs()
                .iter()
                .zip(&inv[n * m..(n + 1) * m])
                .map(|(a, r)| a * r)
                .sum();
            (*mu, beta * f_at_mu)
        })
        .collect();

    let steady = f
        .coords()
        .iter()
        .zip(f.coeffs())
        .enumerate()
        .map(|(i, (z, alpha))| {
            // K(-z_i) = sum_n beta_n / (-z_i - mu_n) = -sum_n beta_n / (mu_n + z_i)
            let k_at: ComplexValue = kernel
                .residues()
                .iter()
                .enumerate()
                .map(|(n, beta)| -beta * inv[n * m + i])
                .sum();
            (*z, alpha * k_at)
        })
        .collect();

    Ok(SpectralProduct { steady, transient })
}
