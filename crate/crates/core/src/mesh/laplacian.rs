use super::linalg::CsrMatrix;
use super::{cross, dot, norm, sub, TriangleMesh};
use crate::error::{GlnoError, Result};

/// Cotangents are clamped to `|cot| <= cot(1 degree)` before assembly.
pub const COT_CLAMP: f64 = 57.289_961_630_759_42;

/// Lumped (barycentric) vertex areas.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix(Vec<f64>);

impl MassMatrix {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(GlnoError::DegenerateMesh(format!(
                "vertex {i} has non-positive mass {w}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Cotangent of the angle at `o` in triangle `(o, a, b)`.
fn cot_at(o: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let (u, v) = (sub(a, o), sub(b, o));
    dot(u, v) / norm(cross(u, v))
}

/// Cotangent stiffness `S` (positive semidefinite, zero row sums) and lumped
/// mass `M`, so that `S phi = lambda M phi` discretizes `-Delta phi = lambda phi`.
///
/// Off-diagonal entries are `-(cot a_ij + cot b_ij) / 2` summed over the faces
/// adjacent to edge `ij`.
pub fn build_laplacian(mesh: &TriangleMesh) -> Result<(CsrMatrix, MassMatrix)> {
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(mesh.num_faces() * 12);
    let mut mass = vec![0.0; n];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = f.map(|v| mesh.vertices()[v]);
        let area = mesh.face_area(fi);
        if !(area > super::MIN_FACE_AREA) {
            return Err(GlnoError::DegenerateMesh(format!(
                "face {fi} has area {area:.3e}"
            )));
        }
        for k in 0..3 {
            // edge (i, j) opposite corner k
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let c = cot_at(p[k], p[i], p[j]).clamp(-COT_CLAMP, COT_CLAMP);
            if !c.is_finite() {
                return Err(GlnoError::DegenerateMesh(format!(
                    "non-finite cotangent in face {fi}"
                )));
            }
            let w = 0.5 * c;
            let (vi, vj) = (f[i], f[j]);
            triplets.push((vi, vj, -w));
            triplets.push((vj, vi, -w));
            triplets.push((vi, vi, w));
            triplets.push((vj, vj, w));
        }
        for &v in f {
            mass[v] += area / 3.0;
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, triplets);
    Ok((stiffness, MassMatrix::new(mass)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_constant_is_cot_one_degree() {
        assert!((COT_CLAMP - 1.0 / 1f64.to_radians().tan()).abs() < 1e-12);
    }

    #[test]
    fn isolated_vertex_has_no_mass() {
        let m = TriangleMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [5.0, 5.0, 5.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(build_laplacian(&m).is_err());
    }

    #[test]
    fn sliver_cotangent_is_clamped() {
        let m = TriangleMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.5, 1e-4, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (s, _) = build_laplacian(&m).unwrap();
        // the obtuse apex has cot close to -infinity before clamping
        assert!((s.get(0, 1) - 0.5 * COT_CLAMP).abs() < 1e-9);
    }
}
