//! Synthetic surface families: icospheres, tori, ellipsoids, flat rectangles,
//! Delaunay triangulations of the unit square, cylinders and perturbed
//! remeshings.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{GlnoError, Result};
use crate::mesh::{Point3, TriangleMesh};

fn normalized(p: Point3) -> Point3 {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Unit icosphere: a regular icosahedron refined `subdiv` times by edge
/// midpoints projected to the sphere. Has `10 * 4^subdiv + 2` vertices.
pub fn icosphere(subdiv: usize) -> Result<TriangleMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalized)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdiv {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalized([
                    (p[0] + q[0]) / 2.0,
                    (p[1] + q[1]) / 2.0,
                    (p[2] + q[2]) / 2.0,
                ]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::new(verts, faces)
}

/// Closed torus with `nu` segments around the tube axis and `nv` around the tube.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> Result<TriangleMesh> {
    if nu < 3 || nv < 3 || !(major > minor && minor > 0.0) {
        return Err(GlnoError::InvalidArgument(format!(
            "torus needs nu, nv >= 3 and major > minor > 0 (got {nu}, {nv}, {major}, {minor})"
        )));
    }
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            verts.push([r * u.cos(), r * u.sin(), minor * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(verts, faces)
}

/// Icosphere scaled by `axes` along x, y, z.
pub fn ellipsoid(subdiv: usize, axes: [f64; 3]) -> Result<TriangleMesh> {
    if axes.iter().any(|a| !(*a > 0.0)) {
        return Err(GlnoError::InvalidArgument(format!(
            "ellipsoid axes {axes:?} must be positive"
        )));
    }
    icosphere(subdiv)?.map_vertices(|p| [p[0] * axes[0], p[1] * axes[1], p[2] * axes[2]])
}

/// Regular triangulation of `[0, width] x [0, height]` with `nx x ny` vertices.
/// Quads are split along alternating diagonals.
pub fn grid_rectangle(nx: usize, ny: usize, width: f64, height: f64) -> Result<TriangleMesh> {
    if nx < 2 || ny < 2 {
        return Err(GlnoError::InvalidArgument(format!(
            "grid needs at least 2x2 vertices, got {nx}x{ny}"
        )));
    }
    let mut verts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            verts.push([
                width * i as f64 / (nx - 1) as f64,
                height * j as f64 / (ny - 1) as f64,
                0.0,
            ]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (
                j * nx + i,
                j * nx + i + 1,
                (j + 1) * nx + i + 1,
                (j + 1) * nx + i,
            );
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriangleMesh::new(verts, faces)
}

/// Delaunay triangulation of the unit square with `n` equispaced points per
/// side and a jittered `(n-2) x (n-2)` interior lattice; see
/// [`delaunay_rectangle_with`].
pub fn delaunay_rectangle(n: usize, seed: u64) -> Result<TriangleMesh> {
    delaunay_rectangle_with(n, 0, seed)
}

/// As [`delaunay_rectangle`], with `drop` random interior points removed.
///
/// Interior points sit on the lattice `(i h, j h)` with independent jitter of
/// at most `0.2 h` per axis, so every interior point stays more than `h / 2`
/// away from the boundary and boundary triangles are never obtuse at the
/// interior vertex.
pub fn delaunay_rectangle_with(n: usize, drop: usize, seed: u64) -> Result<TriangleMesh> {
    if n < 3 {
        return Err(GlnoError::InvalidArgument(format!(
            "need at least 3 points per side, got {n}"
        )));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..n - 1 {
        let s = i as f64 * h;
        pts.push([s, 0.0]);
        pts.push([1.0, s]);
        pts.push([1.0 - s, 1.0]);
        pts.push([0.0, 1.0 - s]);
    }
    let mut interior = Vec::with_capacity((n - 2) * (n - 2));
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let jx = rng.gen_range(-0.2..0.2) * h;
            let jy = rng.gen_range(-0.2..0.2) * h;
            interior.push([i as f64 * h + jx, j as f64 * h + jy]);
        }
    }
    if drop >= interior.len() {
        return Err(GlnoError::InvalidArgument(format!(
            "cannot drop {drop} of {} interior points",
            interior.len()
        )));
    }
    for _ in 0..drop {
        let k = rng.gen_range(0..interior.len());
        interior.remove(k);
    }
    pts.extend(interior);

    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    for p in &pts {
        tri.insert(Point2::new(p[0], p[1]))
            .map_err(|e| GlnoError::DegenerateMesh(format!("Delaunay insertion failed: {e:?}")))?;
    }
    if tri.num_vertices() != pts.len() {
        return Err(GlnoError::DegenerateMesh(
            "duplicate points in Delaunay input".into(),
        ));
    }
    let faces = tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    let verts = tri
        .vertices()
        .map(|v| [v.position().x, v.position().y, 0.0])
        .collect();
    TriangleMesh::new(verts, faces)
}

/// Open cylinder of circumference `length` and height `width`: intrinsically
/// flat and periodic along its first coordinate. Returns the mesh and the
/// unrolled coordinate `u in [0, length)` of each vertex.
pub fn periodic_strip(
    nu: usize,
    nv: usize,
    length: f64,
    width: f64,
) -> Result<(TriangleMesh, Vec<f64>)> {
    if nu < 3 || nv < 2 {
        return Err(GlnoError::InvalidArgument(format!(
            "strip needs nu >= 3 and nv >= 2, got {nu}, {nv}"
        )));
    }
    let radius = length / (2.0 * PI);
    let mut verts = Vec::with_capacity(nu * nv);
    let mut coord = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let z = width * j as f64 / (nv - 1) as f64;
        for i in 0..nu {
            let u = length * i as f64 / nu as f64;
            let a = u / radius;
            verts.push([radius * a.cos(), radius * a.sin(), z]);
            coord.push(u);
        }
    }
    let id = |i: usize, j: usize| j * nu + i % nu;
    let mut faces = Vec::with_capacity(2 * nu * (nv - 1));
    for j in 0..nv - 1 {
        for i in 0..nu {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Ok((TriangleMesh::new(verts, faces)?, coord))
}

fn min_angle_cos_ok(p: [Point3; 3]) -> bool {
    // reject triangles with an angle below ~10 degrees
    for k in 0..3 {
        let o = p[k];
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        let u = [a[0] - o[0], a[1] - o[1], a[2] - o[2]];
        let v = [b[0] - o[0], b[1] - o[1], b[2] - o[2]];
        let c = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
            / ((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
                * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
        if c > 0.985 {
            return false;
        }
    }
    true
}

/// Perturbed remeshing of a closed or open manifold mesh: interior vertices
/// move tangentially by up to 15% of the mean edge length, then about 10% of
/// interior edges are flipped where the flip keeps the mesh manifold and well
/// shaped. Deterministic given `seed`.
pub fn noisy_remesh(mesh: &TriangleMesh, seed: u64) -> Result<TriangleMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = mesh.mean_edge_length();
    let normals = mesh.vertex_normals();
    let boundary = mesh.boundary_mask();
    let mut verts = mesh.vertices().to_vec();
    for (v, p) in verts.iter_mut().enumerate() {
        if boundary[v] {
            continue;
        }
        let d = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = normals[v];
        let dn = d[0] * n[0] + d[1] * n[1] + d[2] * n[2];
        for k in 0..3 {
            p[k] += 0.15 * h * (d[k] - dn * n[k]) / 3f64.sqrt();
        }
    }

    let mut faces = mesh.faces().to_vec();
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut edges: Vec<(usize, usize)> = edge_faces
        .iter()
        .filter(|(_, f)| f.len() == 2)
        .map(|(e, _)| *e)
        .collect();
    edges.sort_unstable();
    let mut touched = vec![false; faces.len()];
    for (a, b) in edges {
        if !rng.gen_bool(0.1) {
            continue;
        }
        let (f1, f2) = {
            let fs = &edge_faces[&(a, b)];
            (fs[0], fs[1])
        };
        if touched[f1] || touched[f2] {
            continue;
        }
        let opp = |f: [usize; 3]| f.into_iter().find(|&v| v != a && v != b).unwrap();
        let (c, d) = (opp(faces[f1]), opp(faces[f2]));
        if c == d || edge_faces.contains_key(&(c.min(d), c.max(d))) {
            continue;
        }
        // keep the orientation of f1: it contains the directed edge a -> b or b -> a
        let f = faces[f1];
        let pos = f.iter().position(|&v| v == a).unwrap();
        let (x, y) = if f[(pos + 1) % 3] == b {
            (a, b)
        } else {
            (b, a)
        };
        // f1 = (x, y, c), f2 = (y, x, d); flipped: (c, x, d) and (d, y, c)
        let n1 = [c, x, d];
        let n2 = [d, y, c];
        let old_n = {
            let p = [verts[x], verts[y], verts[c]];
            crate::mesh::cross(crate::mesh::sub(p[1], p[0]), crate::mesh::sub(p[2], p[0]))
        };
        let ok = [n1, n2].iter().all(|t| {
            let p = t.map(|v| verts[v]);
            let n = crate::mesh::cross(crate::mesh::sub(p[1], p[0]), crate::mesh::sub(p[2], p[0]));
            crate::mesh::dot(n, old_n) > 0.0 && min_angle_cos_ok(p)
        });
        if !ok {
            continue;
        }
        faces[f1] = n1;
        faces[f2] = n2;
        touched[f1] = true;
        touched[f2] = true;
        edge_faces.remove(&(a, b));
        edge_faces.insert((c.min(d), c.max(d)), vec![f1, f2]);
        // rim edge x-d moved from f2 to f1, y-c from f1 to f2
        for (new_face, old_face, (p, q)) in [(f1, f2, (x, d)), (f2, f1, (y, c))] {
            if let Some(list) = edge_faces.get_mut(&(p.min(q), p.max(q))) {
                for g in list.iter_mut().filter(|g| **g == old_face) {
                    *g = new_face;
                }
            }
        }
    }
    TriangleMesh::new(verts, faces)
}

/// Label of a toy shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ShapeClass {
    Sphere,
    Torus,
    Ellipsoid,
}

impl ShapeClass {
    pub fn index(self) -> usize {
        match self {
            ShapeClass::Sphere => 0,
            ShapeClass::Torus => 1,
            ShapeClass::Ellipsoid => 2,
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    // uniform rotation from a random unit quaternion
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Three classes of closed shapes, ten each, randomly rotated and remeshed.
pub fn toy_shape_classification_set(seed: u64) -> Result<Vec<(TriangleMesh, ShapeClass)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(30);
    for class in [ShapeClass::Sphere, ShapeClass::Torus, ShapeClass::Ellipsoid] {
        for _ in 0..10 {
            let base = match class {
                ShapeClass::Sphere => icosphere(2)?,
                ShapeClass::Torus => torus(24, 12, 1.0, rng.gen_range(0.3..0.45))?,
                ShapeClass::Ellipsoid => ellipsoid(
                    2,
                    [
                        rng.gen_range(1.3..1.8),
                        rng.gen_range(0.6..1.0),
                        rng.gen_range(0.4..0.8),
                    ],
                )?,
            };
            let r = random_rotation(&mut rng);
            let rotated = base.map_vertices(|p| {
                [
                    r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
                    r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
                    r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
                ]
            })?;
            out.push((noisy_remesh(&rotated, rng.gen())?, class));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = icosphere(0).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), (12, 20));
        for s in 1..4 {
            assert_eq!(
                icosphere(s).unwrap().num_vertices(),
                10 * 4usize.pow(s as u32) + 2
            );
        }
    }

    #[test]
    fn closed_generators_are_manifold() {
        for m in [icosphere(2).unwrap(), torus(12, 8, 1.0, 0.3).unwrap()] {
            assert!(m.is_closed() && m.is_edge_manifold());
        }
    }

    #[test]
    fn delaunay_square_area() {
        let m = delaunay_rectangle(12, 3).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-9);
        assert_eq!(m.num_vertices(), 4 * 11 + 100);
    }

    #[test]
    fn remesh_keeps_topology() {
        let m = icosphere(2).unwrap();
        let r = noisy_remesh(&m, 9).unwrap();
        assert!(r.is_closed() && r.is_edge_manifold());
        assert_eq!(r.num_faces(), m.num_faces());
        assert_ne!(r.faces(), m.faces());
        assert_eq!(noisy_remesh(&m, 9).unwrap(), r);
    }

    #[test]
    fn strip_is_flat_cylinder() {
        let (m, u) = periodic_strip(16, 3, 2.0, 0.2).unwrap();
        assert_eq!(u.len(), m.num_vertices());
        assert!(!m.is_closed());
    }
}
