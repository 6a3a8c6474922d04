//! Discrete spectral geometry on triangle meshes: cotangent Laplace-Beltrami
//! operator, lumped mass, generalized eigenpairs, geometric fields and the
//! geometric Laplace decomposition / reconstruction.

mod eigen;
mod fields;
mod geometric;
mod io;
mod laplacian;
pub mod linalg;

pub use eigen::{compute_spectrum, EigenOptions, ManifoldSpectrum};
pub use fields::{
    boundary_distance_field, curvature_field, mass_inner_product, raw_mean_curvature, ScalarField,
};
pub use geometric::{
    default_gauss_width, gauss_weight, geometric_decompose, geometric_product,
    geometric_reconstruct, inverse_pole_field, inverse_pole_field_with, GeometricDecomposition,
    GeometricEntry, SteadyResidue, TransientResidue,
};
pub use io::{read_mesh, read_obj, read_off, write_off};
pub use laplacian::{build_laplacian, MassMatrix, COT_CLAMP};

use std::collections::HashMap;

use crate::error::{GlnoError, Result};

/// Smallest face area accepted by [`TriangleMesh::new`].
pub const MIN_FACE_AREA: f64 = 1e-12;

pub type Point3 = [f64; 3];

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GlnoError::NonFinite("mesh vertex coordinates".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(GlnoError::DegenerateMesh(format!(
                    "face {fi} references a vertex >= {nv}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(GlnoError::DegenerateMesh(format!(
                    "face {fi} repeats a vertex"
                )));
            }
        }
        let mesh = Self { vertices, faces };
        for fi in 0..mesh.faces.len() {
            let a = mesh.face_area(fi);
            if !(a > MIN_FACE_AREA) {
                return Err(GlnoError::DegenerateMesh(format!(
                    "face {fi} has area {a:.3e}"
                )));
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi].map(|v| self.vertices[v]);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Undirected edges with the number of incident faces.
    pub fn edge_face_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Sorted undirected edge list.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edge_face_counts().into_keys().collect();
        e.sort_unstable();
        e
    }

    /// `true` for vertices on an edge with a single incident face.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for ((a, b), c) in self.edge_face_counts() {
            if c == 1 {
                mask[a] = true;
                mask[b] = true;
            }
        }
        mask
    }

    pub fn is_closed(&self) -> bool {
        self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Every edge has one or two incident faces.
    pub fn is_edge_manifold(&self) -> bool {
        self.edge_face_counts().values().all(|&c| c == 1 || c == 2)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        edges
            .iter()
            .map(|&(a, b)| norm(sub(self.vertices[a], self.vertices[b])))
            .sum::<f64>()
            / edges.len() as f64
    }

    /// Area-weighted unit vertex normals (zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Point3> {
        let mut n = vec![[0.0; 3]; self.vertices.len()];
        for f in &self.faces {
            let [a, b, c] = f.map(|v| self.vertices[v]);
            let fnorm = cross(sub(b, a), sub(c, a));
            for &v in f {
                for d in 0..3 {
                    n[v][d] += fnorm[d];
                }
            }
        }
        for v in &mut n {
            let l = norm(*v);
            if l > 0.0 {
                for c in v.iter_mut() {
                    *c /= l;
                }
            }
        }
        n
    }

    /// Vertex adjacency lists, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Result<Self> {
        Self::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.faces.clone(),
        )
    }
}
