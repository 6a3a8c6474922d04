use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};

pub const ARRAY_MAGIC: &[u8; 8] = b"GLNOARR\0";

/// Dense `f64` array with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Array {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "dims {dims:?} hold {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.dims.len() + 8 * self.data.len());
        out.extend_from_slice(ARRAY_MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != ARRAY_MAGIC {
            return Err(GlnoError::Format("not an array file (bad magic)".into()));
        }
        let rank = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header = 12 + 8 * rank;
        if bytes.len() < header {
            return Err(GlnoError::Format("array header is truncated".into()));
        }
        let dims: Vec<usize> = bytes[12..header]
            .chunks_exact(8)
            .map(|c| usize::try_from(u64::from_le_bytes(c.try_into().unwrap())))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| GlnoError::Format("array dimension overflows".into()))?;
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| GlnoError::Format("array size overflows".into()))?;
        if n.checked_mul(8).map(|b| b + header) != Some(bytes.len()) {
            return Err(GlnoError::Format(format!(
                "array of dims {dims:?} has {} payload bytes",
                bytes.len() - header
            )));
        }
        let data = bytes[header..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }
}

pub fn write_array(path: &Path, array: &Array) -> Result<()> {
    std::fs::write(path, array.to_bytes())?;
    Ok(())
}

pub fn read_array(path: &Path) -> Result<Array> {
    let bytes =
        std::fs::read(path).map_err(|e| GlnoError::Format(format!("{}: {e}", path.display())))?;
    Array::from_bytes(&bytes)
}

/// Samples of one split: per-vertex rows of every sample stacked, with
/// `offsets[i]..offsets[i+1]` the rows of sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub offsets: Vec<usize>,
    /// Mesh index per sample (mesh tasks); zero on grids.
    pub mesh_ids: Vec<usize>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Split {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            offsets: vec![0],
            mesh_ids: Vec::new(),
            in_dim,
            out_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, input: &[f64], target: &[f64], mesh_id: usize) -> Result<()> {
        let rows = input.len() / self.in_dim;
        if input.len() != rows * self.in_dim || target.len() != rows * self.out_dim || rows == 0 {
            return Err(GlnoError::ShapeMismatch(format!(
                "sample with {} inputs and {} targets does not fit {}/{} channels",
                input.len(),
                target.len(),
                self.in_dim,
                self.out_dim
            )));
        }
        if input.iter().chain(target).any(|v| !v.is_finite()) {
            return Err(GlnoError::NonFinite("dataset sample".into()));
        }
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
        self.offsets.push(self.offsets.last().unwrap() + rows);
        self.mesh_ids.push(mesh_id);
        Ok(())
    }

    pub fn rows(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let r = self.rows(i);
        &self.inputs[r.start * self.in_dim..r.end * self.in_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        let r = self.rows(i);
        &self.targets[r.start * self.out_dim..r.end * self.out_dim]
    }

    /// First `n` samples, the rest.
    pub fn split_off_front(&self, n: usize) -> Result<(Split, Split)> {
        if n > self.len() {
            return Err(GlnoError::InvalidArgument(format!(
                "cannot take {n} of {} samples",
                self.len()
            )));
        }
        let mut a = Split::new(self.in_dim, self.out_dim);
        let mut b = Split::new(self.in_dim, self.out_dim);
        for i in 0..self.len() {
            let dst = if i < n { &mut a } else { &mut b };
            dst.push(self.input(i), self.target(i), self.mesh_ids[i])?;
        }
        Ok((a, b))
    }
}

/// Discretization recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Uniform time series of `nt` samples on `[0, horizon]`.
    Grid1d { nt: usize, horizon: f64 },
    /// Time-major space-time grid.
    Grid2d {
        nx: usize,
        nt: usize,
        length: f64,
        horizon: f64,
    },
    /// One or more meshes; `meshes[i]` is an OFF file and `p_fields[i]` the
    /// geometry field array of mesh `i`.
    Mesh {
        meshes: Vec<String>,
        p_fields: Vec<String>,
        p_field: String,
    },
}

/// `manifest.json` of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: String,
    pub profile: String,
    pub seed: u64,
    pub domain: DomainSpec,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Number of classes for classification tasks.
    pub classes: Option<usize>,
    pub counts: BTreeMap<String, usize>,
    /// Fraction of generated training samples held out for validation.
    pub validation_fraction: f64,
    pub parameters: serde_json::Value,
    /// Split name to `(inputs, targets, offsets, mesh ids)` file names.
    pub files: BTreeMap<String, SplitFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub inputs: String,
    pub targets: String,
    pub offsets: String,
    pub mesh_ids: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the split arrays named `<split>_{inputs,targets,offsets,mesh_ids}.bin`.
pub fn write_split(dir: &Path, name: &str, split: &Split) -> Result<SplitFiles> {
    let files = SplitFiles {
        inputs: format!("{name}_inputs.bin"),
        targets: format!("{name}_targets.bin"),
        offsets: format!("{name}_offsets.bin"),
        mesh_ids: format!("{name}_mesh_ids.bin"),
    };
    let rows = *split.offsets.last().unwrap();
    write_array(
        &dir.join(&files.inputs),
        &Array::new(vec![rows, split.in_dim], split.inputs.clone())?,
    )?;
    write_array(
        &dir.join(&files.targets),
        &Array::new(vec![rows, split.out_dim], split.targets.clone())?,
    )?;
    let offsets = split.offsets.iter().map(|&o| o as f64).collect();
    write_array(
        &dir.join(&files.offsets),
        &Array::new(vec![split.offsets.len()], offsets)?,
    )?;
    let ids = split.mesh_ids.iter().map(|&o| o as f64).collect();
    write_array(
        &dir.join(&files.mesh_ids),
        &Array::new(vec![split.len()], ids)?,
    )?;
    Ok(files)
}

fn index_array(a: &Array, what: &str) -> Result<Vec<usize>> {
    if a.dims.len() != 1 {
        return Err(GlnoError::Format(format!("{what} must be rank 1")));
    }
    a.data
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 {
                Ok(v as usize)
            } else {
                Err(GlnoError::Format(format!(
                    "{what} holds non-index value {v}"
                )))
            }
        })
        .collect()
}

pub fn read_split(dir: &Path, files: &SplitFiles, in_dim: usize, out_dim: usize) -> Result<Split> {
    let inputs = read_array(&dir.join(&files.inputs))?;
    let targets = read_array(&dir.join(&files.targets))?;
    let offsets = index_array(&read_array(&dir.join(&files.offsets))?, "offsets")?;
    let mesh_ids = index_array(&read_array(&dir.join(&files.mesh_ids))?, "mesh ids")?;
    let rows = *offsets
        .last()
        .ok_or_else(|| GlnoError::Format("empty offsets".into()))?;
    if inputs.dims != [rows, in_dim] || targets.dims != [rows, out_dim] {
        return Err(GlnoError::Format(format!(
            "split arrays {:?}/{:?} do not match {rows} rows of {in_dim}/{out_dim} channels",
            inputs.dims, targets.dims
        )));
    }
    if offsets[0] != 0
        || offsets.windows(2).any(|w| w[1] <= w[0])
        || mesh_ids.len() + 1 != offsets.len()
    {
        return Err(GlnoError::Format("split offsets are inconsistent".into()));
    }
    Ok(Split {
        inputs: inputs.data,
        targets: targets.data,
        offsets,
        mesh_ids,
        in_dim,
        out_dim,
    })
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| GlnoError::Format(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn split(&self, dir: &Path, name: &str) -> Result<Split> {
        let files = self
            .files
            .get(name)
            .ok_or_else(|| GlnoError::Format(format!("dataset has no {name} split")))?;
        let split = read_split(dir, files, self.in_dim, self.out_dim)?;
        if let Some(&n) = self.counts.get(name) {
            if n != split.len() {
                return Err(GlnoError::Format(format!(
                    "{name} split has {} samples, manifest says {n}",
                    split.len()
                )));
            }
        }
        Ok(split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip_and_header() {
        let a = Array::new(
            vec![2, 3],
            vec![1.0, -2.0, 3.5, f64::MIN_POSITIVE, 0.0, 1e300],
        )
        .unwrap();
        let b = a.to_bytes();
        assert_eq!(&b[..8], ARRAY_MAGIC);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[12..20].try_into().unwrap()), 2);
        assert_eq!(b.len(), 12 + 16 + 48);
        assert_eq!(Array::from_bytes(&b).unwrap(), a);
        assert!(Array::from_bytes(&b[..b.len() - 1]).is_err());
        assert!(Array::new(vec![2, 2], vec![0.0]).is_err());
    }

    #[test]
    fn split_slicing() {
        let mut s = Split::new(1, 2);
        s.push(&[1.0, 2.0], &[1.0, 1.0, 2.0, 2.0], 0).unwrap();
        s.push(&[3.0], &[3.0, 3.0], 1).unwrap();
        assert_eq!(s.input(1), &[3.0]);
        assert_eq!(s.target(0), &[1.0, 1.0, 2.0, 2.0]);
        let (a, b) = s.split_off_front(1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert_eq!(b.mesh_ids, vec![1]);
        assert!(s.push(&[1.0], &[1.0], 0).is_err());
    }
}
