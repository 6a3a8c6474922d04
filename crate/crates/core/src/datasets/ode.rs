use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};

/// States beyond this magnitude abort integration.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Driven low-dimensional systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum OdeSystem {
    /// `f = x'' + c x' + sin x`.
    Pendulum { c: f64 },
    /// `f = x'' + c x' + x + x^3`.
    Duffing { c: f64 },
    /// `x' = 10 (y - x)`, `y' = x (rho - z) - y`, `z' = x y - 8/3 z - f`.
    Lorenz { rho: f64 },
}

impl OdeSystem {
    pub fn dim(&self) -> usize {
        match self {
            OdeSystem::Lorenz { .. } => 3,
            _ => 2,
        }
    }

    /// Right-hand side at state `s` under forcing value `f`.
    pub fn rhs(&self, s: &[f64], f: f64, out: &mut [f64]) {
        match *self {
            OdeSystem::Pendulum { c } => {
                out[0] = s[1];
                out[1] = f - c * s[1] - s[0].sin();
            }
            OdeSystem::Duffing { c } => {
                out[0] = s[1];
                out[1] = f - c * s[1] - s[0] - s[0].powi(3);
            }
            OdeSystem::Lorenz { rho } => {
                out[0] = 10.0 * (s[1] - s[0]);
                out[1] = s[0] * (rho - s[2]) - s[1];
                out[2] = s[0] * s[1] - 8.0 / 3.0 * s[2] - f;
            }
        }
    }

    /// Default initial state: rest for the oscillators, `(1, 1, 1)` for
    /// Lorenz (its origin is invariant, so a resting start never moves `x`).
    pub fn default_initial_state(&self) -> Vec<f64> {
        match self {
            OdeSystem::Lorenz { .. } => vec![1.0, 1.0, 1.0],
            _ => vec![0.0, 0.0],
        }
    }
}

/// Right-hand side `rhs(t, s, ds)` writing the derivative into `ds`.
pub type Rhs<'a> = &'a dyn Fn(f64, &[f64], &mut [f64]);

/// Classical fixed-step RK4 of `s' = rhs(t, s)` on a uniform grid; returns
/// the state at every grid point.
pub fn rk4_integrate(rhs: Rhs, t_grid: &[f64], initial: &[f64]) -> Result<Vec<Vec<f64>>> {
    if t_grid.len() < 2 {
        return Err(GlnoError::InvalidArgument(
            "time grid needs at least two points".into(),
        ));
    }
    let dt = t_grid[1] - t_grid[0];
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(GlnoError::InvalidArgument(format!(
            "time step {dt} must be positive"
        )));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(GlnoError::InvalidArgument(
                "time grid is not uniform".into(),
            ));
        }
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(GlnoError::NonFinite("initial state".into()));
    }
    let n = initial.len();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut s = initial.to_vec();
    out.push(s.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for (step, &t) in t_grid[..t_grid.len() - 1].iter().enumerate() {
        rhs(t, &s, &mut k1);
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = s[i] + dt * k3[i];
        }
        rhs(t + dt, &tmp, &mut k4);
        for i in 0..n {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(v) = s.iter().find(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            return Err(GlnoError::Unstable(format!(
                "state reached {v:.3e} at step {} (t = {:.4})",
                step + 1,
                t + dt
            )));
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Integrates a driven system; the forcing is evaluated at `t`, `t + dt/2`
/// and `t + dt` within each step.
pub fn integrate_system(
    system: OdeSystem,
    forcing: &dyn Fn(f64) -> f64,
    t_grid: &[f64],
    initial: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if initial.len() != system.dim() {
        return Err(GlnoError::ShapeMismatch(format!(
            "{:?} has {} state variables, got {}",
            system,
            system.dim(),
            initial.len()
        )));
    }
    rk4_integrate(&|t, s, out| system.rhs(s, forcing(t), out), t_grid, initial)
}
