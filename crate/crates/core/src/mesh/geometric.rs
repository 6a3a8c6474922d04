use std::f64::consts::PI;

use super::{mass_inner_product, ManifoldSpectrum, ScalarField};
use crate::error::{check_exponent, GlnoError, Result, POLE_TOLERANCE};
use crate::spectral::{ComplexValue, PoleResidueKernel};

/// One term `alpha_i` of a geometric decomposition, attached to the basis
/// function `exp(-sigma_i P) phi_{mode_i}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricEntry {
    pub sigma: f64,
    pub mode: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricDecomposition {
    entries: Vec<GeometricEntry>,
}

impl GeometricDecomposition {
    pub fn entries(&self) -> &[GeometricEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Steady residue at input coordinate `z = sigma + i omega_mode`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyResidue {
    pub sigma: f64,
    pub mode: usize,
    pub value: ComplexValue,
}

/// Transient residue at kernel pole `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientResidue {
    pub pole: ComplexValue,
    pub value: ComplexValue,
}

fn check_field(p: &[f64], spectrum: &ManifoldSpectrum, what: &str) -> Result<()> {
    if p.len() != spectrum.num_vertices() {
        return Err(GlnoError::ShapeMismatch(format!(
            "{what} has {} values for {} vertices",
            p.len(),
            spectrum.num_vertices()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(GlnoError::NonFinite(what.into()));
    }
    Ok(())
}

fn max_abs(p: &[f64]) -> f64 {
    p.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `alpha_i = <exp(-sigma_i P) f, phi_{k_i}>_M` for each requested `(sigma_i, k_i)`.
pub fn geometric_decompose(
    f: &[f64],
    spectrum: &ManifoldSpectrum,
    p: &[f64],
    entries: &[(f64, usize)],
) -> Result<GeometricDecomposition> {
    check_field(f, spectrum, "input field")?;
    check_field(p, spectrum, "geometry field")?;
    let p_max = max_abs(p);
    for (i, &(sigma, mode)) in entries.iter().enumerate() {
        if mode >= spectrum.len() {
            return Err(GlnoError::InvalidArgument(format!(
                "entry {i} uses mode {mode} of a {}-mode spectrum",
                spectrum.len()
            )));
        }
        check_exponent(sigma * p_max)?;
        if entries[..i].iter().any(|&(s, k)| s == sigma && k == mode) {
            return Err(GlnoError::InvalidArgument(format!(
                "duplicate entry ({sigma}, {mode})"
            )));
        }
    }
    let mut weighted = vec![0.0; f.len()];
    let mut last_sigma = f64::NAN;
    let mut out = Vec::with_capacity(entries.len());
    for &(sigma, mode) in entries {
        if sigma != last_sigma {
            for ((w, fv), pv) in weighted.iter_mut().zip(f).zip(p) {
                *w = (-sigma * pv).exp() * fv;
            }
            last_sigma = sigma;
        }
        let alpha = mass_inner_product(&weighted, spectrum.eigenfunction(mode), spectrum.mass())?;
        out.push(GeometricEntry { sigma, mode, alpha });
    }
    Ok(GeometricDecomposition { entries: out })
}

/// Residues of `F(s) K(s)` for a geometric decomposition, with input
/// coordinates `z_i = sigma_i + i omega_{k_i}`.
pub fn geometric_product(
    decomposition: &GeometricDecomposition,
    kernel: &PoleResidueKernel,
    spectrum: &ManifoldSpectrum,
) -> Result<(Vec<SteadyResidue>, Vec<TransientResidue>)> {
    let z: Vec<ComplexValue> = decomposition
        .entries()
        .iter()
        .map(|e| ComplexValue::new(e.sigma, spectrum.frequencies()[e.mode]))
        .collect();
    let mut inv = Vec::with_capacity(kernel.len() * z.len());
    for (n, mu) in kernel.poles().iter().enumerate() {
        for (i, zi) in z.iter().enumerate() {
            let d = mu + zi;
            if d.norm() <= POLE_TOLERANCE {
                return Err(GlnoError::PoleCollision {
                    what: format!("mu_{n} + z_{i}"),
                    distance: d.norm(),
                });
            }
            inv.push(d.inv());
        }
    }
    let m = z.len();
    let transient = kernel
        .poles()
        .iter()
        .zip(kernel.residues())
        .enumerate()
        .map(|(n, (mu, beta))| {
            let f_mu: ComplexValue = decomposition
                .entries()
                .iter()
                .zip(&inv[n * m..(n + 1) * m])
                .map(|(e, r)| e.alpha * r)
                .sum();
            TransientResidue {
                pole: *mu,
                value: beta * f_mu,
            }
        })
        .collect();
    let steady = decomposition
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let k_at: ComplexValue = kernel
                .residues()
                .iter()
                .enumerate()
                .map(|(n, b)| -b * inv[n * m + i])
                .sum();
            SteadyResidue {
                sigma: e.sigma,
                mode: e.mode,
                value: e.alpha * k_at,
            }
        })
        .collect();
    Ok((steady, transient))
}

/// `exp(-x^2 / (2 width^2)) / (sqrt(2 pi) width)`.
pub fn gauss_weight(x: f64, width: f64) -> f64 {
    (-x * x / (2.0 * width * width)).exp() / ((2.0 * PI).sqrt() * width)
}

/// Mean spacing of consecutive eigenfrequencies, the default Gaussian width.
pub fn default_gauss_width(spectrum: &ManifoldSpectrum) -> f64 {
    let w = spectrum.frequencies();
    if w.len() < 2 {
        return 1.0;
    }
    let spacing = (w[w.len() - 1] - w[0]) / (w.len() - 1) as f64;
    if spacing > 0.0 {
        spacing
    } else {
        1.0
    }
}

/// Inverse transform of `1/(s - mu)` on the manifold:
/// `exp(re(mu) P(x)) sum_k Gauss(im(mu) - omega_k) phi_k(x)` over all
/// retained eigenpairs, with unnormalized Gaussian weights.
pub fn inverse_pole_field(
    mu: ComplexValue,
    spectrum: &ManifoldSpectrum,
    p: &[f64],
    width: f64,
) -> Result<ScalarField> {
    inverse_pole_field_with(mu, spectrum, p, width, false)
}

/// [`inverse_pole_field`], optionally rescaling the Gaussian weights to sum to one.
pub fn inverse_pole_field_with(
    mu: ComplexValue,
    spectrum: &ManifoldSpectrum,
    p: &[f64],
    width: f64,
    renormalize: bool,
) -> Result<ScalarField> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(GlnoError::InvalidArgument(format!(
            "Gaussian width {width} must be positive"
        )));
    }
    check_field(p, spectrum, "geometry field")?;
    check_exponent(mu.re * max_abs(p))?;
    let mut weights: Vec<f64> = spectrum
        .frequencies()
        .iter()
        .map(|w| gauss_weight(mu.im - w, width))
        .collect();
    if renormalize {
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }
    let v = spectrum.num_vertices();
    let mut field = vec![0.0; v];
    for (k, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (acc, phi) in field.iter_mut().zip(spectrum.eigenfunction(k)) {
            *acc += w * phi;
        }
    }
    for (acc, pv) in field.iter_mut().zip(p) {
        *acc *= (mu.re * pv).exp();
    }
    Ok(ScalarField(field))
}

/// `g = re( sum_i a_i exp(-sigma_i P) phi_{k_i} + sum_n b_n L^{-1}{1/(s - mu_n)} )`.
pub fn geometric_reconstruct(
    steady: &[SteadyResidue],
    transient: &[TransientResidue],
    spectrum: &ManifoldSpectrum,
    p: &[f64],
    width: f64,
    renormalize: bool,
) -> Result<ScalarField> {
    check_field(p, spectrum, "geometry field")?;
    let p_max = max_abs(p);
    let v = spectrum.num_vertices();
    let mut out = vec![0.0; v];
    for r in steady {
        if r.mode >= spectrum.len() {
            return Err(GlnoError::InvalidArgument(format!(
                "steady residue uses mode {}",
                r.mode
            )));
        }
        check_exponent(r.sigma * p_max)?;
        let a = r.value.re;
        for ((o, phi), pv) in out.iter_mut().zip(spectrum.eigenfunction(r.mode)).zip(p) {
            *o += a * (-r.sigma * pv).exp() * phi;
        }
    }
    for r in transient {
        let field = inverse_pole_field_with(r.pole, spectrum, p, width, renormalize)?;
        let b = r.value.re;
        for (o, f) in out.iter_mut().zip(field.iter()) {
            *o += b * f;
        }
    }
    Ok(ScalarField(out))
}
