use std::f64::consts::PI;
use std::sync::Arc;

use crate::autodiff::Matrix;
use crate::error::{GlnoError, Result};
use crate::mesh::{boundary_distance_field, default_gauss_width, ManifoldSpectrum, TriangleMesh};
use crate::spectral::retained_bins;

/// Constant linear maps for a tensor grid of `nx` spatial by `nt` temporal
/// samples, vertex `it * nx + ix`. Time inside the network is normalized to
/// `t / T` in `[0, 1)`, so bin `k` has angular frequency `2 pi k`.
#[derive(Debug, Clone)]
pub struct GridContext {
    pub nx: usize,
    pub nt: usize,
    /// `(kx, kt)` per retained bin.
    pub bins: Vec<(i64, i64)>,
    pub kx: Vec<i64>,
    /// `omega_b = 2 pi kt`.
    pub omega: Vec<f64>,
    /// Normalized time per vertex, `V x 1`.
    pub t: Matrix,
    /// Forward DFT (`bins x V`), real and imaginary parts, scaled by `1/V`.
    pub analysis_re: Arc<Matrix>,
    pub analysis_im: Arc<Matrix>,
    /// Synthesis `cos(theta)` and `sin(theta)` (`V x bins`).
    pub synth_cos: Arc<Matrix>,
    pub synth_sin: Arc<Matrix>,
    /// Sums bins sharing a spatial wavenumber (`nkx x bins`).
    pub group: Arc<Matrix>,
    /// `exp(i 2 pi kx x)` per vertex (`V x nkx`).
    pub space_cos: Arc<Matrix>,
    pub space_sin: Arc<Matrix>,
    /// Position features for the fusion path: normalized `t` (1D) or
    /// `x, t` (2D) per vertex.
    pub geo: Matrix,
}

impl GridContext {
    /// One-dimensional time series of `nt` samples.
    pub fn new_1d(nt: usize, modes: usize) -> Result<Self> {
        Self::new_2d(1, nt, 1, modes)
    }

    pub fn new_2d(nx: usize, nt: usize, modes_x: usize, modes_t: usize) -> Result<Self> {
        if nx == 0 || nt == 0 || modes_x == 0 || modes_t == 0 {
            return Err(GlnoError::InvalidArgument(
                "grid sizes and modes must be positive".into(),
            ));
        }
        if 2 * modes_t - 1 > nt || 2 * modes_x - 1 > nx {
            return Err(GlnoError::InvalidArgument(format!(
                "{modes_x}x{modes_t} modes do not fit a {nx}x{nt} grid"
            )));
        }
        let kx = retained_bins(modes_x);
        let kt = retained_bins(modes_t);
        let bins: Vec<(i64, i64)> = kx
            .iter()
            .flat_map(|&a| kt.iter().map(move |&b| (a, b)))
            .collect();
        let v = nx * nt;
        let nb = bins.len();
        let phase = |vert: usize, b: usize| {
            let (ix, it) = (vert % nx, vert / nx);
            let (a, c) = bins[b];
            2.0 * PI
                * ((a * ix as i64).rem_euclid(nx as i64) as f64 / nx as f64
                    + (c * it as i64).rem_euclid(nt as i64) as f64 / nt as f64)
        };
        let scale = 1.0 / v as f64;
        let analysis_re = Matrix::from_fn(nb, v, |b, j| phase(j, b).cos() * scale);
        let analysis_im = Matrix::from_fn(nb, v, |b, j| -phase(j, b).sin() * scale);
        let synth_cos = Matrix::from_fn(v, nb, |j, b| phase(j, b).cos());
        let synth_sin = Matrix::from_fn(v, nb, |j, b| phase(j, b).sin());
        let group = Matrix::from_fn(
            kx.len(),
            nb,
            |g, b| if bins[b].0 == kx[g] { 1.0 } else { 0.0 },
        );
        let sphase = |j: usize, g: usize| {
            2.0 * PI * (kx[g] * (j % nx) as i64).rem_euclid(nx as i64) as f64 / nx as f64
        };
        let space_cos = Matrix::from_fn(v, kx.len(), |j, g| sphase(j, g).cos());
        let space_sin = Matrix::from_fn(v, kx.len(), |j, g| sphase(j, g).sin());
        let t = Matrix::from_fn(v, 1, |j, _| (j / nx) as f64 / nt as f64);
        let geo = if nx == 1 {
            t.clone()
        } else {
            Matrix::from_fn(v, 2, |j, c| match c {
                0 => (j % nx) as f64 / (nx - 1) as f64,
                _ => (j / nx) as f64 / nt as f64,
            })
        };
        Ok(Self {
            geo,
            nx,
            nt,
            omega: bins.iter().map(|&(_, c)| 2.0 * PI * c as f64).collect(),
            bins,
            kx,
            t,
            analysis_re: Arc::new(analysis_re),
            analysis_im: Arc::new(analysis_im),
            synth_cos: Arc::new(synth_cos),
            synth_sin: Arc::new(synth_sin),
            group: Arc::new(group),
            space_cos: Arc::new(space_cos),
            space_sin: Arc::new(space_sin),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.nx * self.nt
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }
}

/// Constant maps for a mesh: eigenbasis, mass-weighted projection, geometry
/// field and fusion features.
#[derive(Debug, Clone)]
pub struct MeshContext {
    /// `V x k` eigenfunctions.
    pub phi: Arc<Matrix>,
    /// `Phi^T M`, `k x V`.
    pub project: Arc<Matrix>,
    pub omega: Vec<f64>,
    /// Geometry field `P` as a column.
    pub p: Matrix,
    /// `x, y, z, P, boundary distance` per vertex.
    pub geo: Matrix,
    pub gauss_width: f64,
    pub mass: Vec<f64>,
}

impl MeshContext {
    pub fn new(
        mesh: &TriangleMesh,
        spectrum: &ManifoldSpectrum,
        p: &[f64],
        gauss_width: Option<f64>,
    ) -> Result<Self> {
        let v = spectrum.num_vertices();
        if mesh.num_vertices() != v || p.len() != v {
            return Err(GlnoError::ShapeMismatch(format!(
                "mesh has {} vertices, spectrum {v}, geometry field {}",
                mesh.num_vertices(),
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(GlnoError::NonFinite("geometry field".into()));
        }
        let k = spectrum.len();
        let ef = spectrum.eigenfunctions();
        let mass = spectrum.mass().weights().to_vec();
        let phi = Matrix::from_fn(v, k, |i, j| ef[(i, j)]);
        let project = Matrix::from_fn(k, v, |j, i| ef[(i, j)] * mass[i]);
        let dist = boundary_distance_field(mesh);
        let verts = mesh.vertices();
        let geo = Matrix::from_fn(v, 5, |i, c| match c {
            0..=2 => verts[i][c],
            3 => p[i],
            _ => dist.0[i],
        });
        let width = gauss_width.unwrap_or_else(|| default_gauss_width(spectrum));
        if !(width > 0.0 && width.is_finite()) {
            return Err(GlnoError::InvalidArgument(format!(
                "Gaussian width {width} must be positive"
            )));
        }
        Ok(Self {
            phi: Arc::new(phi),
            project: Arc::new(project),
            omega: spectrum.frequencies().to_vec(),
            p: Matrix::column(p.to_vec()),
            geo,
            gauss_width: width,
            mass,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.phi.rows
    }

    pub fn num_modes(&self) -> usize {
        self.phi.cols
    }
}

/// Discretization the operator acts on.
#[derive(Debug, Clone)]
pub enum Domain {
    Grid(GridContext),
    Mesh(MeshContext),
}

impl Domain {
    pub fn num_vertices(&self) -> usize {
        match self {
            Domain::Grid(g) => g.num_vertices(),
            Domain::Mesh(m) => m.num_vertices(),
        }
    }

    pub fn num_modes(&self) -> usize {
        match self {
            Domain::Grid(g) => g.num_bins(),
            Domain::Mesh(m) => m.num_modes(),
        }
    }

    /// Largest magnitude of the exponent variable: one on grids, where
    /// time is normalized to `[0, 1)`, and `max |P|` on meshes.
    pub fn extent(&self) -> f64 {
        match self {
            Domain::Grid(_) => 1.0,
            Domain::Mesh(m) => {
                let e = m.p.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if e > 0.0 {
                    e
                } else {
                    1.0
                }
            }
        }
    }

    /// Mean magnitude of the retained frequencies, the scale of the pole
    /// imaginary-part initialization.
    pub fn mean_frequency(&self) -> f64 {
        let w = match self {
            Domain::Grid(g) => &g.omega,
            Domain::Mesh(m) => &m.omega,
        };
        let mean = w.iter().map(|x| x.abs()).sum::<f64>() / w.len().max(1) as f64;
        if mean > 0.0 {
            mean
        } else {
            1.0
        }
    }

    /// Quadrature weights per vertex: lumped mass on meshes, uniform on grids.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Domain::Grid(g) => vec![1.0; g.num_vertices()],
            Domain::Mesh(m) => m.mass.clone(),
        }
    }
}
