use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Train,
    Test,
}

/// Amplitude ranges of the two forcing families.
pub const TRAIN_AMPLITUDE: (f64, f64) = (0.05, 10.0);
pub const TEST_AMPLITUDE: (f64, f64) = (0.14, 9.09);
/// Default range of forcing angular frequencies.
pub const FORCING_OMEGA: (f64, f64) = (0.5, 2.0);

/// One forcing function: `A exp(-r t) sin(omega t)` in 1D and
/// `A exp(-r t) (1 - omega^2) sin(omega x)` (plus
/// `A^2 exp(-2 r t) sin^2(omega x)` when `quadratic`) in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub amplitude: f64,
    pub omega: f64,
    pub decay: f64,
    pub kind: ForcingKind,
    pub quadratic: bool,
}

impl ForcingSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match self.kind {
            ForcingKind::Train => TRAIN_AMPLITUDE,
            ForcingKind::Test => TEST_AMPLITUDE,
        };
        if !(self.amplitude >= lo && self.amplitude <= hi) {
            return Err(GlnoError::InvalidArgument(format!(
                "amplitude {} outside [{lo}, {hi}] for {:?} forcing",
                self.amplitude, self.kind
            )));
        }
        if !self.omega.is_finite() || !self.decay.is_finite() || self.decay < 0.0 {
            return Err(GlnoError::InvalidArgument(
                "forcing frequency and decay must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Random draw with amplitude from the family range, frequency from
    /// `omega_range` and the given decay.
    pub fn sample(
        rng: &mut impl Rng,
        kind: ForcingKind,
        decay: f64,
        omega_range: (f64, f64),
        quadratic: bool,
    ) -> Self {
        let (lo, hi) = match kind {
            ForcingKind::Train => TRAIN_AMPLITUDE,
            ForcingKind::Test => TEST_AMPLITUDE,
        };
        Self {
            amplitude: rng.gen_range(lo..=hi),
            omega: rng.gen_range(omega_range.0..=omega_range.1),
            decay,
            kind,
            quadratic,
        }
    }

    pub fn eval_1d(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp() * (self.omega * t).sin()
    }

    pub fn eval_2d(&self, x: f64, t: f64) -> f64 {
        let s = (self.omega * x).sin();
        let mut f = self.amplitude * (-self.decay * t).exp() * (1.0 - self.omega * self.omega) * s;
        if self.quadratic {
            f += self.amplitude * self.amplitude * (-2.0 * self.decay * t).exp() * s * s;
        }
        f
    }
}

/// Samples a 1D forcing on `t_grid`.
pub fn generate_forcing_1d(spec: &ForcingSpec, t_grid: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(t_grid.iter().map(|&t| spec.eval_1d(t)).collect())
}
