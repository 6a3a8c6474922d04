use std::fmt::Write as _;
use std::path::Path;

use super::TriangleMesh;
use crate::error::{GlnoError, Result};

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.ok_or_else(|| GlnoError::Parse(format!("line {line}: missing number")))?
        .parse()
        .map_err(|_| GlnoError::Parse(format!("line {line}: bad number")))
}

/// Reads an ASCII OFF mesh. Polygons with more than three vertices are fan
/// triangulated.
pub fn read_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines
        .next()
        .ok_or_else(|| GlnoError::Parse("empty OFF file".into()))?;
    let mut counts_line = None;
    if let Some(rest) = header.strip_prefix("OFF") {
        if !rest.trim().is_empty() {
            counts_line = Some((ln, rest.trim().to_string()));
        }
    } else {
        return Err(GlnoError::Parse(format!("line {ln}: missing OFF header")));
    }
    let (ln, counts) = match counts_line {
        Some(c) => c,
        None => {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| GlnoError::Parse("missing OFF counts".into()))?;
            (ln, l.to_string())
        }
    };
    let mut it = counts.split_whitespace();
    let nv = parse_f64(it.next(), ln)? as usize;
    let nf = parse_f64(it.next(), ln)? as usize;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| GlnoError::Parse("truncated vertex list".into()))?;
        let mut it = l.split_whitespace();
        vertices.push([
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| GlnoError::Parse("truncated face list".into()))?;
        let nums: Vec<usize> = l
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| GlnoError::Parse(format!("line {ln}: bad index")))
            })
            .collect::<Result<_>>()?;
        let (&n, idx) = nums
            .split_first()
            .ok_or_else(|| GlnoError::Parse(format!("line {ln}: empty face")))?;
        if n < 3 || idx.len() < n {
            return Err(GlnoError::Parse(format!("line {ln}: malformed face")));
        }
        for j in 1..n - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Reads the `v` and `f` records of an ASCII OBJ file (1-based or negative
/// indices, `v/vt/vn` forms accepted).
pub fn read_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                vertices.push([
                    parse_f64(it.next(), ln)?,
                    parse_f64(it.next(), ln)?,
                    parse_f64(it.next(), ln)?,
                ]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let raw: i64 =
                            tok.split('/').next().unwrap_or("").parse().map_err(|_| {
                                GlnoError::Parse(format!("line {ln}: bad face index"))
                            })?;
                        let resolved = if raw < 0 {
                            vertices.len() as i64 + raw
                        } else {
                            raw - 1
                        };
                        if resolved < 0 {
                            return Err(GlnoError::Parse(format!(
                                "line {ln}: face index out of range"
                            )));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(GlnoError::Parse(format!(
                        "line {ln}: face with fewer than 3 vertices"
                    )));
                }
                for j in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Reads `.off` or `.obj` by extension.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("off") => read_off(&text),
        Some("obj") => read_obj(&text),
        _ => Err(GlnoError::Parse(format!(
            "unknown mesh format: {}",
            path.display()
        ))),
    }
}

/// ASCII OFF with round-trippable float formatting.
pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.num_vertices(), mesh.num_faces());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD_OFF: &str = "OFF\n# unit square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";

    #[test]
    fn off_quad_is_fan_triangulated() {
        let m = read_off(QUAD_OFF).unwrap();
        assert_eq!(m.num_faces(), 2);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_roundtrip_is_exact() {
        let m = TriangleMesh::new(
            vec![
                [0.1, 0.2, 0.3],
                [1.0 / 3.0, 0.0, 0.0],
                [0.0, 2.0f64.sqrt(), 0.0],
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(read_off(&write_off(&m)).unwrap(), m);
    }

    #[test]
    fn obj_indices_are_one_based() {
        let text = "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n";
        let m = read_obj(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        let neg = read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(neg.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_off("PLY\n").is_err());
        assert!(read_off("OFF\n3 1 0\n0 0 0\n1 0 0\n").is_err());
        assert!(read_obj("v 0 0 0\nv 1 0 0\nf 1 2 3\n").is_err());
        assert!(read_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").is_err());
    }
}
