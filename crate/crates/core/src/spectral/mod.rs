//! Complex-plane spectral algebra on uniform grids.
//!
//! A signal sampled on `[0, T)` is decomposed onto generalized Laplace
//! basis functions `e^{-z t}` with `z = sigma + i omega`, multiplied in the
//! Laplace domain by a pole-residue kernel, and brought back to the time
//! domain through the closed-form residues of the product. Setting every
//! decay rate to zero recovers the classic Fourier/Laplace neural operator.

mod calculus;
mod decompose;
mod reconstruct;

pub use calculus::{eval_decomposition, laplace_of_basis, pole_residue_product};
pub(crate) use decompose::retained_bins;
pub use decompose::{decompose_uniform, dft_direct, uniform_grid};
pub use reconstruct::{glno_forward, lno_forward, reconstruct_time, reconstruct_time_complex};

use num_complex::Complex64;

use crate::error::{check_exponent, GlnoError, Result, POLE_TOLERANCE};

/// Complex scalar used for poles, residues, coefficients and evaluation points.
pub type ComplexValue = Complex64;

/// A point `z = sigma + i omega` of the generalized Laplace basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCoordinate {
    pub sigma: f64,
    pub omega: f64,
}

impl SpectralCoordinate {
    pub fn new(sigma: f64, omega: f64) -> Self {
        Self { sigma, omega }
    }

    pub fn as_complex(&self) -> ComplexValue {
        ComplexValue::new(self.sigma, self.omega)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.sigma, -self.omega)
    }
}

/// Evaluates the basis function `e^{-z x} = e^{-sigma x} (cos(omega x) - i sin(omega x))`.
pub fn evaluate_basis(z: SpectralCoordinate, x: f64) -> Result<ComplexValue> {
    if !x.is_finite() {
        return Err(GlnoError::NonFinite("basis evaluation point".into()));
    }
    let exponent = -z.sigma * x;
    check_exponent(exponent)?;
    let mag = exponent.exp();
    let phase = z.omega * x;
    Ok(ComplexValue::new(mag * phase.cos(), -mag * phase.sin()))
}

/// Laplace-domain kernel `K(s) = sum_n beta_n / (s - mu_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueKernel {
    poles: Vec<ComplexValue>,
    residues: Vec<ComplexValue>,
}

impl PoleResidueKernel {
    pub fn new(poles: Vec<ComplexValue>, residues: Vec<ComplexValue>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} poles but {} residues",
                poles.len(),
                residues.len()
            )));
        }
        if poles
            .iter()
            .chain(&residues)
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(GlnoError::NonFinite("kernel poles/residues".into()));
        }
        for (n, a) in poles.iter().enumerate() {
            for (m, b) in poles.iter().enumerate().skip(n + 1) {
                let d = (a - b).norm();
                if d <= POLE_TOLERANCE {
                    return Err(GlnoError::PoleCollision {
                        what: format!("mu_{n} - mu_{m}"),
                        distance: d,
                    });
                }
            }
        }
        Ok(Self { poles, residues })
    }

    /// Like [`PoleResidueKernel::new`], additionally requiring `re(mu_n) <= 0`.
    pub fn new_stable(poles: Vec<ComplexValue>, residues: Vec<ComplexValue>) -> Result<Self> {
        if let Some((n, p)) = poles.iter().enumerate().find(|(_, p)| p.re > 0.0) {
            return Err(GlnoError::InvalidArgument(format!(
                "unstable pole mu_{n} = {p} has positive real part"
            )));
        }
        Self::new(poles, residues)
    }

    pub fn poles(&self) -> &[ComplexValue] {
        &self.poles
    }

    pub fn residues(&self) -> &[ComplexValue] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.re <= 0.0)
    }

    /// `K(s)`; errors when `s` lies within the pole tolerance of some `mu_n`.
    pub fn eval(&self, s: ComplexValue) -> Result<ComplexValue> {
        let mut acc = ComplexValue::new(0.0, 0.0);
        for (n, (mu, beta)) in self.poles.iter().zip(&self.residues).enumerate() {
            let d = s - mu;
            if d.norm() <= POLE_TOLERANCE {
                return Err(GlnoError::PoleCollision {
                    what: format!("s - mu_{n}"),
                    distance: d.norm(),
                });
            }
            acc += beta / d;
        }
        Ok(acc)
    }
}

/// Input coefficients `alpha_i` attached to coordinates `z_i`, representing
/// `f(t) ~ sum_i alpha_i e^{-z_i t}` with Laplace transform `sum_i alpha_i / (s + z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    coords: Vec<SpectralCoordinate>,
    coeffs: Vec<ComplexValue>,
    length: f64,
}

impl SpectralDecomposition {
    pub fn new(
        coords: Vec<SpectralCoordinate>,
        coeffs: Vec<ComplexValue>,
        length: f64,
    ) -> Result<Self> {
        if coords.len() != coeffs.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} coordinates but {} coefficients",
                coords.len(),
                coeffs.len()
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(GlnoError::InvalidArgument(format!(
                "domain length {length} must be positive"
            )));
        }
        if coords
            .iter()
            .any(|z| !z.sigma.is_finite() || !z.omega.is_finite())
            || coeffs
                .iter()
                .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(GlnoError::NonFinite("decomposition".into()));
        }
        for (i, a) in coords.iter().enumerate() {
            for b in &coords[i + 1..] {
                if (a.as_complex() - b.as_complex()).norm() <= POLE_TOLERANCE {
                    return Err(GlnoError::InvalidArgument(format!(
                        "duplicate spectral coordinate ({}, {})",
                        a.sigma, a.omega
                    )));
                }
            }
        }
        Ok(Self {
            coords,
            coeffs,
            length,
        })
    }

    pub fn coords(&self) -> &[SpectralCoordinate] {
        &self.coords
    }

    pub fn coeffs(&self) -> &[ComplexValue] {
        &self.coeffs
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Same coordinates, coefficients mapped through `f`.
    pub fn map_coeffs(&self, f: impl Fn(ComplexValue) -> ComplexValue) -> Self {
        Self {
            coords: self.coords.clone(),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
            length: self.length,
        }
    }
}

/// Residues of `G(s) = F(s) K(s)`: steady terms anchored at the input poles
/// `-z_i` and transient terms anchored at the kernel poles `mu_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProduct {
    pub steady: Vec<(SpectralCoordinate, ComplexValue)>,
    pub transient: Vec<(ComplexValue, ComplexValue)>,
}

impl SpectralProduct {
    /// Partial-fraction evaluation `sum_i a_i / (s + z_i) + sum_n b_n / (s - mu_n)`.
    pub fn eval(&self, s: ComplexValue) -> Result<ComplexValue> {
        let mut acc = ComplexValue::new(0.0, 0.0);
        for (z, a) in &self.steady {
            acc += a * laplace_of_basis(*z, s)?;
        }
        for (n, (mu, b)) in self.transient.iter().enumerate() {
            let d = s - mu;
            if d.norm() <= POLE_TOLERANCE {
                return Err(GlnoError::PoleCollision {
                    what: format!("s - mu_{n}"),
                    distance: d.norm(),
                });
            }
            acc += b / d;
        }
        Ok(acc)
    }
}
