use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Scaling;
use crate::autodiff::Matrix;
use crate::datasets::{read_array, DomainSpec, Manifest, Split};
use crate::error::{GlnoError, Result};
use crate::mesh::{build_laplacian, compute_spectrum, read_mesh, EigenOptions, TriangleMesh};
use crate::nn::{Domain, DomainKind, GridContext, MeshContext, NetworkConfig, TaskKind};

/// Dataset directory with its manifest and (for mesh tasks) meshes and
/// geometry fields.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub meshes: Vec<(TriangleMesh, Vec<f64>)>,
}

impl LoadedDataset {
    /// Reads the manifest only.
    pub fn manifest_only(dir: &Path) -> Result<Self> {
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest::read(dir)?,
            meshes: Vec::new(),
        })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let mut data = Self::manifest_only(dir)?;
        if let DomainSpec::Mesh {
            meshes, p_fields, ..
        } = &data.manifest.domain
        {
            if meshes.len() != p_fields.len() || meshes.is_empty() {
                return Err(GlnoError::Format(
                    "manifest mesh and field lists differ".into(),
                ));
            }
            for (m, p) in meshes.iter().zip(p_fields) {
                let mesh = read_mesh(&dir.join(m))?;
                let field = read_array(&dir.join(p))?.data;
                if field.len() != mesh.num_vertices() {
                    return Err(GlnoError::Format(format!("{p} does not match {m}")));
                }
                data.meshes.push((mesh, field));
            }
        }
        Ok(data)
    }

    pub fn domain_kind(&self) -> DomainKind {
        match self.manifest.domain {
            DomainSpec::Grid1d { .. } => DomainKind::Grid1d,
            DomainSpec::Grid2d { .. } => DomainKind::Grid2d,
            DomainSpec::Mesh { .. } => DomainKind::Mesh,
        }
    }

    /// `shape` with domain, channel counts and task kind taken from the dataset.
    pub fn network_config(&self, shape: &NetworkConfig) -> NetworkConfig {
        let m = &self.manifest;
        NetworkConfig {
            domain: self.domain_kind(),
            in_dim: m.in_dim,
            out_dim: m.classes.unwrap_or(m.out_dim),
            task: if m.classes.is_some() {
                TaskKind::NodeClassification
            } else {
                TaskKind::Regression
            },
            ..shape.clone()
        }
    }

    pub fn split(&self, name: &str) -> Result<Split> {
        let s = self.manifest.split(&self.dir, name)?;
        let n_domains = match self.manifest.domain {
            DomainSpec::Mesh { .. } => self.meshes.len().max(1),
            _ => 1,
        };
        if let Some(id) = s.mesh_ids.iter().find(|&&id| id >= n_domains) {
            return Err(GlnoError::Format(format!(
                "{name} split references mesh {id}"
            )));
        }
        Ok(s)
    }

    /// One discretization per mesh (or the single grid).
    pub fn build_domains(&self, cfg: &NetworkConfig) -> Result<Vec<Domain>> {
        match self.manifest.domain {
            DomainSpec::Grid1d { nt, .. } => {
                Ok(vec![Domain::Grid(GridContext::new_1d(nt, cfg.modes)?)])
            }
            DomainSpec::Grid2d { nx, nt, .. } => Ok(vec![Domain::Grid(GridContext::new_2d(
                nx,
                nt,
                cfg.modes_x,
                cfg.modes,
            )?)]),
            DomainSpec::Mesh { .. } => self
                .meshes
                .iter()
                .map(|(mesh, p)| {
                    let (s, m) = build_laplacian(mesh)?;
                    let spec = compute_spectrum(&s, &m, cfg.modes, &EigenOptions::default())?;
                    Ok(Domain::Mesh(MeshContext::new(
                        mesh,
                        &spec,
                        p,
                        cfg.gauss_width,
                    )?))
                })
                .collect(),
        }
    }
}

/// Per-channel affine standardization of inputs and regression targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub in_mean: Vec<f64>,
    pub in_std: Vec<f64>,
    pub out_mean: Vec<f64>,
    pub out_std: Vec<f64>,
}

fn channel_stats(values: &[f64], cols: usize, center: bool) -> (Vec<f64>, Vec<f64>) {
    let rows = (values.len() / cols).max(1) as f64;
    let mut mean = vec![0.0; cols];
    if center {
        for (k, v) in values.iter().enumerate() {
            mean[k % cols] += v / rows;
        }
    }
    let mut var = vec![0.0; cols];
    for (k, v) in values.iter().enumerate() {
        var[k % cols] += (v - mean[k % cols]).powi(2) / rows;
    }
    let std = var
        .iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, std)
}

impl Normalization {
    pub fn identity(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_mean: vec![0.0; in_dim],
            in_std: vec![1.0; in_dim],
            out_mean: vec![0.0; out_dim],
            out_std: vec![1.0; out_dim],
        }
    }

    /// Statistics of a training split; targets stay raw for classification.
    pub fn fit(split: &Split, scaling: Scaling, classify: bool, out_dim: usize) -> Self {
        let center = match scaling {
            Scaling::None => return Self::identity(split.in_dim, out_dim),
            Scaling::Standard => true,
            Scaling::Scale => false,
        };
        let (in_mean, in_std) = channel_stats(&split.inputs, split.in_dim, center);
        let (out_mean, out_std) = if classify {
            (vec![0.0; out_dim], vec![1.0; out_dim])
        } else {
            channel_stats(&split.targets, split.out_dim, center)
        };
        Self {
            in_mean,
            in_std,
            out_mean,
            out_std,
        }
    }

    /// Standardized `V x C` network input of sample `i`.
    pub fn input(&self, split: &Split, i: usize) -> Matrix {
        let rows = split.rows(i);
        let c = split.in_dim;
        let raw = &split.inputs[rows.start * c..rows.end * c];
        let data = raw
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.in_mean[k % c]) / self.in_std[k % c])
            .collect();
        Matrix {
            rows: rows.len(),
            cols: c,
            data,
        }
    }

    /// Raw `V x C` target of sample `i`.
    pub fn target(&self, split: &Split, i: usize) -> Matrix {
        let rows = split.rows(i);
        let c = split.out_dim;
        Matrix {
            rows: rows.len(),
            cols: c,
            data: split.targets[rows.start * c..rows.end * c].to_vec(),
        }
    }

    /// Target in network output units.
    pub fn standardize_target(&self, target: &Matrix) -> Matrix {
        let c = target.cols;
        let data = target
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.out_mean[k % c]) / self.out_std[k % c])
            .collect();
        Matrix {
            rows: target.rows,
            cols: c,
            data,
        }
    }

    /// Maps network outputs back to target units.
    pub fn denormalize(&self, out: &Matrix) -> Matrix {
        let c = out.cols;
        let data = out
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.out_std[k % c] + self.out_mean[k % c])
            .collect();
        Matrix {
            rows: out.rows,
            cols: c,
            data,
        }
    }
}
