use std::collections::VecDeque;
use std::ops::{Deref, DerefMut};

use super::{build_laplacian, dot, MassMatrix, TriangleMesh};
use crate::error::{GlnoError, Result};

/// One real value per vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// `<f, g>_M = sum_v f_v g_v m_v`.
pub fn mass_inner_product(f: &[f64], g: &[f64], mass: &MassMatrix) -> Result<f64> {
    if f.len() != g.len() || f.len() != mass.len() {
        return Err(GlnoError::ShapeMismatch(format!(
            "fields of length {} and {} against {} mass entries",
            f.len(),
            g.len(),
            mass.len()
        )));
    }
    Ok(f.iter()
        .zip(g)
        .zip(mass.weights())
        .map(|((a, b), m)| a * b * m)
        .sum())
}

/// Min-max normalization to `[0, 1]`; near-constant fields map to zeros.
fn normalize_unit(raw: Vec<f64>) -> ScalarField {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if !(spread > 1e-9 * hi.abs().max(1.0)) {
        return ScalarField::zeros(raw.len());
    }
    ScalarField(raw.into_iter().map(|v| (v - lo) / spread).collect())
}

/// Unnormalized mean-curvature magnitude `|H|` per vertex, from the normal
/// component of the mean-curvature normal `M^{-1} S X = 2 H n`.
pub fn raw_mean_curvature(mesh: &TriangleMesh) -> Result<Vec<f64>> {
    let (s, mass) = build_laplacian(mesh)?;
    let normals = mesh.vertex_normals();
    let n = mesh.num_vertices();
    let mut hn = vec![[0.0; 3]; n];
    for (i, h) in hn.iter_mut().enumerate() {
        for (j, w) in s.row(i) {
            let p = mesh.vertices()[j];
            for d in 0..3 {
                h[d] += w * p[d];
            }
        }
        for c in h.iter_mut() {
            *c /= mass.weights()[i];
        }
    }
    Ok(hn
        .iter()
        .zip(&normals)
        .map(|(h, nrm)| 0.5 * dot(*h, *nrm).abs())
        .collect())
}

/// Curvature field in `[0, 1]`: min-max normalized `|H|`, all zeros when the
/// raw field is constant (e.g. a flat mesh).
pub fn curvature_field(mesh: &TriangleMesh) -> Result<ScalarField> {
    Ok(normalize_unit(raw_mean_curvature(mesh)?))
}

/// Breadth-first graph distance to the boundary, in units of the mean edge
/// length, min-max normalized. Closed meshes give all zeros.
pub fn boundary_distance_field(mesh: &TriangleMesh) -> ScalarField {
    let n = mesh.num_vertices();
    let boundary = mesh.boundary_mask();
    let adj = mesh.adjacency();
    let mut dist = vec![usize::MAX; n];
    let mut q = VecDeque::new();
    for (v, &b) in boundary.iter().enumerate() {
        if b {
            dist[v] = 0;
            q.push_back(v);
        }
    }
    if q.is_empty() {
        return ScalarField::zeros(n);
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
        }
    }
    let h = mesh.mean_edge_length();
    let raw = dist
        .iter()
        .map(|&d| if d == usize::MAX { 0.0 } else { d as f64 * h })
        .collect();
    normalize_unit(raw)
}
