//! Generalized Laplace neural operators: spectral algebra on uniform grids,
//! spectral geometry on triangle meshes, a small reverse-mode autodiff
//! network, synthetic datasets and the training/evaluation harness.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Numeric kernels index several parallel arrays by the same counter.
#![allow(clippy::needless_range_loop)]

pub mod autodiff;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod nn;
pub mod spectral;

pub use error::{GlnoError, Result};
pub use mesh::{ManifoldSpectrum, MassMatrix, ScalarField, TriangleMesh};
pub use spectral::{
    ComplexValue, PoleResidueKernel, SpectralCoordinate, SpectralDecomposition, SpectralProduct,
};
