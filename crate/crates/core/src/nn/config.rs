use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    NodeClassification,
}

/// Discretization family the network is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Grid1d,
    Grid2d,
    Mesh,
}

/// Shape of the operator network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub domain: DomainKind,
    pub in_dim: usize,
    /// Latent channels `D`.
    pub channels: usize,
    pub blocks: usize,
    /// Retained modes: DFT bins per signed axis on grids (`m` keeps
    /// `0, +-1, .., +-(m-1)`), eigenpairs on meshes.
    pub modes: usize,
    /// Retained DFT bins along the passive `x` axis of 2D grids.
    pub modes_x: usize,
    pub poles: usize,
    /// Number of decay rates `S`.
    pub sigmas: usize,
    pub out_dim: usize,
    /// Gaussian projection width on meshes; `None` uses the mean eigenfrequency spacing.
    pub gauss_width: Option<f64>,
    pub renormalize_gauss: bool,
    pub task: TaskKind,
    /// Geometric-feature fusion path (mesh tasks).
    pub fusion: bool,
    /// Learnable decay rates; when off every block uses a single fixed `sigma = 0`.
    pub learn_sigma: bool,
    /// Keeps `re(mu) < 0` through `mu_re = -softplus(p)`.
    pub stable_poles: bool,
    /// Spectral path on; off gives a pointwise MLP baseline of the same width.
    #[serde(default = "enabled")]
    pub spectral: bool,
    /// Additive biases in every dense layer; without them (and without
    /// fusion) a zero input maps to a zero output.
    #[serde(default = "enabled")]
    pub bias: bool,
}

fn enabled() -> bool {
    true
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::Grid1d,
            in_dim: 1,
            channels: 16,
            blocks: 4,
            modes: 16,
            modes_x: 1,
            poles: 1,
            sigmas: 1,
            out_dim: 1,
            gauss_width: None,
            renormalize_gauss: false,
            task: TaskKind::Regression,
            fusion: false,
            learn_sigma: true,
            stable_poles: true,
            spectral: true,
            bias: true,
        }
    }
}

/// Geometric features fed to the fusion path on meshes: `x, y, z, P, distance`.
pub const GEO_FEATURES: usize = 5;

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("in_dim", self.in_dim),
            ("channels", self.channels),
            ("blocks", self.blocks),
            ("modes", self.modes),
            ("modes_x", self.modes_x),
            ("poles", self.poles),
            ("sigmas", self.sigmas),
            ("out_dim", self.out_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(GlnoError::InvalidArgument(format!(
                "network {name} must be positive"
            )));
        }
        if let Some(w) = self.gauss_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(GlnoError::InvalidArgument(format!(
                    "gauss_width {w} must be positive"
                )));
            }
        }
        if !self.learn_sigma && self.sigmas != 1 {
            return Err(GlnoError::InvalidArgument(
                "fixed sigma = 0 uses exactly one decay rate".into(),
            ));
        }
        Ok(())
    }

    /// Retained spectral modes per decay rate.
    pub fn num_bins(&self) -> usize {
        match self.domain {
            DomainKind::Grid1d => 2 * self.modes - 1,
            DomainKind::Grid2d => (2 * self.modes_x - 1) * (2 * self.modes - 1),
            DomainKind::Mesh => self.modes,
        }
    }

    /// Width of the fusion features: position on grids, geometry on meshes.
    pub fn geo_features(&self) -> usize {
        match self.domain {
            DomainKind::Grid1d => 1,
            DomainKind::Grid2d => 2,
            DomainKind::Mesh => GEO_FEATURES,
        }
    }

    /// Decay rates actually used per block.
    pub fn sigma_count(&self) -> usize {
        if self.learn_sigma {
            self.sigmas
        } else {
            1
        }
    }
}
