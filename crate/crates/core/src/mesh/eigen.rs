use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{CsrMatrix, SkylineCholesky};
use super::MassMatrix;
use crate::error::{GlnoError, Result};

/// Solver controls for [`compute_spectrum`].
#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random starting subspace.
    pub seed: u64,
    /// Extra subspace vectors beyond `k`; `None` picks `max(k/2, 8)`.
    pub guard: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            seed: 0x5eed,
            guard: None,
        }
    }
}

/// Mass-orthonormal Laplace-Beltrami eigenpairs, ascending.
#[derive(Debug, Clone)]
pub struct ManifoldSpectrum {
    eigenvalues: Vec<f64>,
    frequencies: Vec<f64>,
    /// `V x k`, column `j` is eigenfunction `j`.
    eigenfunctions: DMatrix<f64>,
    mass: MassMatrix,
    /// Worst relative residual reached by the solver.
    pub residual: f64,
    pub iterations: usize,
}

impl ManifoldSpectrum {
    /// Assembles a spectrum from precomputed parts (checkpoints, tests).
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenfunctions: DMatrix<f64>,
        mass: MassMatrix,
    ) -> Result<Self> {
        if eigenfunctions.ncols() != eigenvalues.len() || eigenfunctions.nrows() != mass.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} eigenvalues, {}x{} eigenfunctions, {} mass entries",
                eigenvalues.len(),
                eigenfunctions.nrows(),
                eigenfunctions.ncols(),
                mass.len()
            )));
        }
        let frequencies = eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
        Ok(Self {
            eigenvalues,
            frequencies,
            eigenfunctions,
            mass,
            residual: 0.0,
            iterations: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `omega_k = sqrt(max(lambda_k, 0))`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, k: usize) -> &[f64] {
        let v = self.eigenfunctions.nrows();
        &self.eigenfunctions.as_slice()[k * v..(k + 1) * v]
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    /// Keeps the first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            frequencies: self.frequencies[..k].to_vec(),
            eigenfunctions: self.eigenfunctions.columns(0, k).into_owned(),
            mass: self.mass.clone(),
            residual: self.residual,
            iterations: self.iterations,
        }
    }
}

/// Scales the columns of `y` so that `y^T M y = I`, in two Cholesky-QR passes.
fn mass_orthonormalize(y: &mut DMatrix<f64>, mass: &[f64]) -> bool {
    for _ in 0..2 {
        let mut my = y.clone();
        for (i, m) in mass.iter().enumerate() {
            my.row_mut(i).scale_mut(*m);
        }
        let gram = y.transpose() * &my;
        let Some(chol) = gram.cholesky() else {
            return false;
        };
        let l = chol.l();
        // y <- y L^{-T}
        let Some(linv) = l.try_inverse() else {
            return false;
        };
        *y = &*y * linv.transpose();
    }
    true
}

/// The `k` algebraically smallest eigenpairs of `S phi = lambda M phi`.
///
/// Shift-invert block subspace iteration with Rayleigh-Ritz: the subspace
/// `X` is repeatedly replaced by `(S - tau M)^{-1} M X` for a small negative
/// shift `tau`, M-orthonormalized, and rotated onto Ritz vectors. Iteration
/// stops when every wanted Ritz pair satisfies
/// `|S x - theta M x| <= tol (|S x| + |theta| |M x| + 1e-6 |S|_inf |x|)`; the
/// last term keeps the null-space pair from demanding an exact zero.
pub fn compute_spectrum(
    stiffness: &CsrMatrix,
    mass: &MassMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<ManifoldSpectrum> {
    let n = stiffness.dim();
    if mass.len() != n {
        return Err(GlnoError::ShapeMismatch(format!(
            "stiffness {n}x{n} but {} mass entries",
            mass.len()
        )));
    }
    if k == 0 || k >= n {
        return Err(GlnoError::InvalidArgument(format!(
            "need 0 < k < V, got k = {k}, V = {n}"
        )));
    }
    let m = mass.weights();
    let diag = stiffness.diagonal();
    let scale = diag.iter().zip(m).map(|(s, w)| s / w).sum::<f64>() / n as f64;
    let tau = -1e-3 * if scale > 0.0 { scale } else { 1.0 };
    let shifted = stiffness.add_diagonal(-tau, m);
    let chol = SkylineCholesky::factor(&shifted)?;
    let s_norm = stiffness.norm_inf();

    let guard = opts.guard.unwrap_or_else(|| (k / 2).max(8));
    let b = (k + guard).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, b, |_, _| StandardNormal.sample(&mut rng));
    if !mass_orthonormalize(&mut x, m) {
        return Err(GlnoError::Singular(
            "random start block is rank deficient".into(),
        ));
    }

    let mut worst = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut rhs = x.clone();
        for (i, w) in m.iter().enumerate() {
            rhs.row_mut(i).scale_mut(*w);
        }
        let solved = chol.solve_block(rhs.as_slice(), b);
        let mut y = DMatrix::from_vec(n, b, solved);
        if !mass_orthonormalize(&mut y, m) {
            // lost rank; refresh the weakest directions with noise and retry
            for v in y.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += 1e-8 * e;
            }
            if !mass_orthonormalize(&mut y, m) {
                return Err(GlnoError::Singular(
                    "subspace collapsed during iteration".into(),
                ));
            }
        }

        let sy = DMatrix::from_vec(n, b, stiffness.matmul_block(y.as_slice(), b));
        let mut h = y.transpose() * &sy;
        h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let c = DMatrix::from_fn(b, b, |r, col| eig.eigenvectors[(r, order[col])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &y * &c;
        let sx = &sy * &c;

        worst = 0.0;
        for j in 0..k {
            let xj = x.column(j);
            let sxj = sx.column(j);
            let mut r2 = 0.0;
            let mut mx2 = 0.0;
            for i in 0..n {
                let mx = m[i] * xj[i];
                r2 += (sxj[i] - theta[j] * mx).powi(2);
                mx2 += mx * mx;
            }
            let denom = sxj.norm() + theta[j].abs() * mx2.sqrt() + 1e-6 * s_norm * xj.norm();
            worst = worst.max(r2.sqrt() / denom);
        }
        if worst <= opts.tol || b == n {
            let mut phi = x.columns(0, k).into_owned();
            for mut col in phi.column_iter_mut() {
                let (imax, _) = col.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bi, bv)
                    }
                });
                if col[imax] < 0.0 {
                    col.neg_mut();
                }
            }
            let mut spec = ManifoldSpectrum::from_parts(theta[..k].to_vec(), phi, mass.clone())?;
            spec.residual = worst;
            spec.iterations = it;
            return Ok(spec);
        }
    }
    Err(GlnoError::NoConvergence {
        iterations: opts.max_iter,
        residual: worst,
    })
}
