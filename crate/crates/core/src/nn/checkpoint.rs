use std::io::{Read, Write};
use std::path::Path;

use crate::autodiff::Matrix;
use crate::error::{GlnoError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GLNOCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized model state: a metadata document (run configuration,
/// normalization, task), its digest and named `f64` blobs.
///
/// Layout, little-endian: magic, `u32` version, `u64` digest of the
/// metadata, `u64` metadata length and bytes, `u32` blob count, then per blob
/// `u32` name length, name bytes, `u64` rows, `u64` cols and the values.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: String,
    pub blobs: Vec<(String, Matrix)>,
}

/// 64-bit FNV-1a of the metadata bytes.
pub fn config_digest(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Checkpoint {
    pub fn blob(&self, name: &str) -> Option<&Matrix> {
        self.blobs.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&config_digest(&self.metadata).to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u64).to_le_bytes());
        out.extend_from_slice(self.metadata.as_bytes());
        out.extend_from_slice(&(self.blobs.len() as u32).to_le_bytes());
        for (name, m) in &self.blobs {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols as u64).to_le_bytes());
            for v in &m.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(GlnoError::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(GlnoError::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let digest = r.u64()?;
        let len = r.len_u64()?;
        let metadata = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| GlnoError::Format("checkpoint metadata is not UTF-8".into()))?;
        if config_digest(&metadata) != digest {
            return Err(GlnoError::Format(
                "checkpoint metadata digest mismatch".into(),
            ));
        }
        let count = r.u32()? as usize;
        let mut blobs = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let nlen = r.u32()? as usize;
            let name = String::from_utf8(r.take(nlen)?.to_vec())
                .map_err(|_| GlnoError::Format("blob name is not UTF-8".into()))?;
            let rows = r.len_u64()?;
            let cols = r.len_u64()?;
            let n = rows
                .checked_mul(cols)
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| GlnoError::Format(format!("blob {name} is truncated")))?;
            let data = r
                .take(n * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            blobs.push((name, Matrix::new(rows, cols, data)?));
        }
        if r.remaining() != 0 {
            return Err(GlnoError::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self { metadata, blobs })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(GlnoError::Format("checkpoint is truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len_u64(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| GlnoError::Format("length does not fit in memory".into()))
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&ckpt.to_bytes())?;
    f.sync_all()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            metadata: "{\"a\":1}".into(),
            blobs: vec![
                (
                    "w".into(),
                    Matrix::new(2, 2, vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300]).unwrap(),
                ),
                ("b".into(), Matrix::new(1, 3, vec![0.1, 0.2, 0.3]).unwrap()),
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.metadata, c.metadata);
        for ((_, a), (_, b)) in c.blobs.iter().zip(&back.blobs) {
            let ab: Vec<u64> = a.data.iter().map(|x| x.to_bits()).collect();
            let bb: Vec<u64> = b.data.iter().map(|x| x.to_bits()).collect();
            assert_eq!(ab, bb);
        }
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[30] ^= 1;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
