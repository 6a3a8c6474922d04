use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};

/// Solutions beyond this magnitude are reported as unstable.
pub const INSTABILITY_LIMIT: f64 = 1e6;

/// Space-time grid for the 2D solvers: `nx` nodes on `[0, length]`
/// including both (clamped) ends and `nt` output times on `[0, horizon]`.
/// Fields are stored time-major, entry `it * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub nx: usize,
    pub nt: usize,
    pub length: f64,
    pub horizon: f64,
}

impl SpaceTimeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.nt < 2 {
            return Err(GlnoError::InvalidArgument(format!(
                "grid {}x{} is too small",
                self.nx, self.nt
            )));
        }
        if !(self.length > 0.0
            && self.horizon > 0.0
            && self.length.is_finite()
            && self.horizon.is_finite())
        {
            return Err(GlnoError::InvalidArgument(
                "grid length and horizon must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    /// Internal steps per output interval: the solver step is at most `dx / 2`,
    /// which keeps the Crank-Nicolson phase error of the slowest modes small.
    pub fn substeps(&self) -> usize {
        (2.0 * self.dt() / self.dx()).ceil().max(1.0) as usize
    }

    /// Samples `f(x, t)` on the grid.
    pub fn sample(&self, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.nt * self.nx)
            .map(|k| f(self.x(k % self.nx), self.t(k / self.nx)))
            .collect()
    }
}

/// Thomas algorithm for a constant tridiagonal matrix `(lower, diag, upper)`.
fn solve_tridiagonal(
    lower: f64,
    diag: f64,
    upper: f64,
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    let mut denom = diag;
    if denom.abs() < 1e-300 {
        return Err(GlnoError::Singular("tridiagonal pivot 0 vanished".into()));
    }
    scratch[0] = upper / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag - lower * scratch[i - 1];
        if denom.abs() < 1e-300 {
            return Err(GlnoError::Singular(format!(
                "tridiagonal pivot {i} vanished"
            )));
        }
        scratch[i] = upper / denom;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}

fn check_stable(y: &[f64], t: f64) -> Result<()> {
    if let Some(v) = y.iter().find(|v| !(v.abs() <= INSTABILITY_LIMIT)) {
        return Err(GlnoError::Unstable(format!(
            "solution reached {v:.3e} at t = {t:.4}"
        )));
    }
    Ok(())
}

/// `f = D y_xx + k y^2 - y_t` with `y = 0` at both ends: Crank-Nicolson for
/// the diffusion and forcing terms, explicit Euler for `k y^2`.
pub fn solve_reaction_diffusion_2d(
    d: f64,
    k: f64,
    forcing: &dyn Fn(f64, f64) -> f64,
    initial: &dyn Fn(f64) -> f64,
    grid: &SpaceTimeGrid,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if !(d > 0.0 && d.is_finite() && k.is_finite()) {
        return Err(GlnoError::InvalidArgument(format!(
            "diffusivity {d} must be positive, k {k} finite"
        )));
    }
    let (nx, nt) = (grid.nx, grid.nt);
    let n = nx - 2;
    let h = grid.dx();
    let sub = grid.substeps();
    let dt = grid.dt() / sub as f64;
    let r = d * dt / (h * h);
    let xs: Vec<f64> = (1..nx - 1).map(|i| grid.x(i)).collect();
    let mut y: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    let mut out = vec![0.0; nt * nx];
    out[1..nx - 1].copy_from_slice(&y);
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut f0: Vec<f64> = xs.iter().map(|&x| forcing(x, 0.0)).collect();
    let mut f1 = vec![0.0; n];
    for j in 1..nt {
        for s in 0..sub {
            let t1 = grid.t(j - 1) + (s + 1) as f64 * dt;
            for (v, &x) in f1.iter_mut().zip(&xs) {
                *v = forcing(x, t1);
            }
            for i in 0..n {
                let left = if i > 0 { y[i - 1] } else { 0.0 };
                let right = if i + 1 < n { y[i + 1] } else { 0.0 };
                rhs[i] = y[i] + 0.5 * r * (left - 2.0 * y[i] + right) - 0.5 * dt * (f0[i] + f1[i]);
                if k != 0.0 {
                    rhs[i] += dt * k * y[i] * y[i];
                }
            }
            solve_tridiagonal(-0.5 * r, 1.0 + r, -0.5 * r, &mut rhs, &mut scratch)?;
            std::mem::swap(&mut y, &mut rhs);
            std::mem::swap(&mut f0, &mut f1);
            check_stable(&y, t1)?;
        }
        out[j * nx + 1..j * nx + nx - 1].copy_from_slice(&y);
    }
    Ok(out)
}

/// `f = D y_xx - y_t` with `y = 0` at both ends, Crank-Nicolson in time.
pub fn solve_diffusion_2d(
    d: f64,
    forcing: &dyn Fn(f64, f64) -> f64,
    initial: &dyn Fn(f64) -> f64,
    grid: &SpaceTimeGrid,
) -> Result<Vec<f64>> {
    solve_reaction_diffusion_2d(d, 0.0, forcing, initial, grid)
}

/// `f = EI w_xxxx + rho_a w_tt`, simply supported (`w = w_xx = 0` at both
/// ends): 5-point fourth-difference stencil with mirrored ghost nodes and
/// average-acceleration Newmark (`beta = 1/4`, `gamma = 1/2`).
pub fn solve_beam_2d(
    ei: f64,
    rho_a: f64,
    forcing: &dyn Fn(f64, f64) -> f64,
    initial: &dyn Fn(f64) -> f64,
    initial_velocity: &dyn Fn(f64) -> f64,
    grid: &SpaceTimeGrid,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if !(ei > 0.0 && rho_a > 0.0 && ei.is_finite() && rho_a.is_finite()) {
        return Err(GlnoError::InvalidArgument(
            "beam constants must be positive".into(),
        ));
    }
    let (nx, nt) = (grid.nx, grid.nt);
    let n = nx - 2;
    let h = grid.dx();
    let sub = grid.substeps();
    let dt = grid.dt() / sub as f64;
    let xs: Vec<f64> = (1..nx - 1).map(|i| grid.x(i)).collect();
    let h4 = h.powi(4);
    let stiffness = DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        let mut v = match d {
            0 => 6.0,
            1 => -4.0,
            2 => 1.0,
            _ => 0.0,
        };
        if d == 0 && (i == 0 || i == n - 1) {
            v -= 1.0;
        }
        ei * v / h4
    });
    let (beta, gamma) = (0.25, 0.5);
    let c0 = rho_a / (beta * dt * dt);
    let eff = &stiffness + DMatrix::identity(n, n) * c0;
    let chol = eff
        .cholesky()
        .ok_or_else(|| GlnoError::Singular("Newmark matrix is not positive definite".into()))?;
    let mut w = DVector::from_iterator(n, xs.iter().map(|&x| initial(x)));
    let mut v = DVector::from_iterator(n, xs.iter().map(|&x| initial_velocity(x)));
    let f0 = DVector::from_iterator(n, xs.iter().map(|&x| forcing(x, 0.0)));
    let mut a = (f0 - &stiffness * &w) / rho_a;
    let mut out = vec![0.0; nt * nx];
    out[1..nx - 1].copy_from_slice(w.as_slice());
    for j in 1..nt {
        for s in 0..sub {
            let t1 = grid.t(j - 1) + (s + 1) as f64 * dt;
            let f1 = DVector::from_iterator(n, xs.iter().map(|&x| forcing(x, t1)));
            let rhs =
                f1 + (&w * c0 + &v * (rho_a / (beta * dt)) + &a * (rho_a * (0.5 / beta - 1.0)));
            let w1 = chol.solve(&rhs);
            let a1 = (&w1 - &w) / (beta * dt * dt) - &v / (beta * dt) - &a * (0.5 / beta - 1.0);
            v += (&a * (1.0 - gamma) + &a1 * gamma) * dt;
            w = w1;
            a = a1;
            check_stable(w.as_slice(), t1)?;
        }
        out[j * nx + 1..j * nx + nx - 1].copy_from_slice(w.as_slice());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solve() {
        let mut b = vec![1.0, 2.0, 3.0, 4.0];
        let mut s = vec![0.0; 4];
        solve_tridiagonal(-1.0, 3.0, -0.5, &mut b, &mut s).unwrap();
        let a = DMatrix::from_fn(4, 4, |i, j| match (i as i64) - (j as i64) {
            0 => 3.0,
            1 => -1.0,
            -1 => -0.5,
            _ => 0.0,
        });
        let x = a
            .lu()
            .solve(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        for (p, q) in b.iter().zip(x.iter()) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
