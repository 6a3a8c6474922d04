use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};
use crate::mesh::linalg::{CsrMatrix, SkylineCholesky};
use crate::mesh::{build_laplacian, MassMatrix, TriangleMesh};

/// Distance tolerance for identifying vertices on the boundary of `[0,1]^2`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Isotropic Gaussian bump `exp(-|p - mu|^2 / (2 sigma^2))` of unit height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSource {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma: f64,
}

impl GaussianSource {
    /// `mu ~ U(0,1)^2`, `sigma ~ U(0.025, 0.1)`.
    pub fn sample(rng: &mut impl Rng) -> Self {
        Self {
            mu_x: rng.gen_range(0.0..1.0),
            mu_y: rng.gen_range(0.0..1.0),
            sigma: rng.gen_range(0.025..0.1),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - self.mu_x).powi(2) + (y - self.mu_y).powi(2);
        (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Sum of the sources at every vertex.
pub fn source_field(mesh: &TriangleMesh, sources: &[GaussianSource]) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .map(|v| sources.iter().map(|s| s.eval(v[0], v[1])).sum())
        .collect()
}

/// Boundary vertices of a mesh of the unit square.
pub fn unit_square_boundary(mesh: &TriangleMesh) -> Result<Vec<bool>> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in mesh.vertices() {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    let tol = 1e-9;
    if lo[0].abs() > tol
        || lo[1].abs() > tol
        || (hi[0] - 1.0).abs() > tol
        || (hi[1] - 1.0).abs() > tol
        || hi[2] - lo[2] > tol
    {
        return Err(GlnoError::InvalidArgument(
            "mesh does not cover the unit square in the z = const plane".into(),
        ));
    }
    Ok(mesh
        .vertices()
        .iter()
        .map(|v| {
            v[0] < BOUNDARY_TOLERANCE
                || v[1] < BOUNDARY_TOLERANCE
                || v[0] > 1.0 - BOUNDARY_TOLERANCE
                || v[1] > 1.0 - BOUNDARY_TOLERANCE
        })
        .collect())
}

/// Prefactored Dirichlet Poisson problem `-Laplace u = f`, `u = 0` on the
/// boundary of the unit square: cotangent stiffness, lumped mass load.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    interior: Vec<usize>,
    mass: MassMatrix,
    chol: SkylineCholesky,
    n: usize,
}

impl PoissonSolver {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        let boundary = unit_square_boundary(mesh)?;
        let (stiffness, mass) = build_laplacian(mesh)?;
        let n = mesh.num_vertices();
        let interior: Vec<usize> = (0..n).filter(|&i| !boundary[i]).collect();
        if interior.is_empty() {
            return Err(GlnoError::Singular("mesh has no interior vertices".into()));
        }
        let mut index = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            index[i] = k;
        }
        let mut triplets = Vec::new();
        for &i in &interior {
            for (j, v) in stiffness.row(i) {
                if index[j] != usize::MAX {
                    triplets.push((index[i], index[j], v));
                }
            }
        }
        let reduced = CsrMatrix::from_triplets(interior.len(), triplets);
        let chol = SkylineCholesky::factor(&reduced)?;
        Ok(Self {
            interior,
            mass,
            chol,
            n,
        })
    }

    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n {
            return Err(GlnoError::ShapeMismatch(format!(
                "source has {} values for {} vertices",
                f.len(),
                self.n
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(GlnoError::NonFinite("Poisson source".into()));
        }
        let m = self.mass.weights();
        let rhs: Vec<f64> = self.interior.iter().map(|&i| m[i] * f[i]).collect();
        let x = self.chol.solve(&rhs);
        let mut u = vec![0.0; self.n];
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x[k];
        }
        Ok(u)
    }
}

/// One-off Dirichlet Poisson solve on a mesh of the unit square.
pub fn solve_poisson_mesh(mesh: &TriangleMesh, f: &[f64]) -> Result<Vec<f64>> {
    PoissonSolver::new(mesh)?.solve(f)
}

/// Implicit heat smoothing `(M + (tau/steps) S)^{-1} M` applied `steps` times.
#[derive(Debug, Clone)]
pub struct HeatSmoother {
    mass: MassMatrix,
    chol: SkylineCholesky,
    steps: usize,
}

impl HeatSmoother {
    pub fn new(mesh: &TriangleMesh, tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) || steps == 0 {
            return Err(GlnoError::InvalidArgument(format!(
                "heat time {tau} and steps {steps} must be positive"
            )));
        }
        let (stiffness, mass) = build_laplacian(mesh)?;
        let n = mesh.num_vertices();
        let h = tau / steps as f64;
        let mut triplets = Vec::new();
        for i in 0..n {
            for (j, v) in stiffness.row(i) {
                triplets.push((i, j, h * v));
            }
            triplets.push((i, i, mass.weights()[i]));
        }
        let chol = SkylineCholesky::factor(&CsrMatrix::from_triplets(n, triplets))?;
        Ok(Self { mass, chol, steps })
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.mass.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "field has {} values",
                f.len()
            )));
        }
        let mut u = f.to_vec();
        for _ in 0..self.steps {
            let rhs: Vec<f64> = u
                .iter()
                .zip(self.mass.weights())
                .map(|(a, m)| a * m)
                .collect();
            u = self.chol.solve(&rhs);
        }
        Ok(u)
    }
}
