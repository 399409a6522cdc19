//! Binary field snapshots.
//!
//! Layout (little-endian): `b"TQGSNAP1"`, u32 version, u32 n, u32 k, f64 α,
//! f64 t, u32 name length, UTF-8 name, u64 DOF count, DOF-count f64
//! coefficients. A TOML sidecar `<file>.meta.toml` stores the config hash
//! and step index.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TqgError};

pub const MAGIC: &[u8; 8] = b"TQGSNAP1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: u32,
    pub degree: u32,
    pub alpha: f64,
    pub t: f64,
    pub name: String,
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub config_hash: String,
    pub step: u64,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + self.name.len() + 8 * self.coeffs.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.degree.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.name.len() as u32).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        out.extend_from_slice(&(self.coeffs.len() as u64).to_le_bytes());
        for c in &self.coeffs {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut bytes, &mut magic)?;
        if &magic != MAGIC {
            return Err(TqgError::Snapshot("bad magic".into()));
        }
        let version = read_u32(&mut bytes)?;
        if version != VERSION {
            return Err(TqgError::Snapshot(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut bytes)?;
        let degree = read_u32(&mut bytes)?;
        let alpha = f64::from_bits(read_u64(&mut bytes)?);
        let t = f64::from_bits(read_u64(&mut bytes)?);
        let len = read_u32(&mut bytes)? as usize;
        if len > bytes.len() {
            return Err(TqgError::Snapshot("truncated field name".into()));
        }
        let mut name = vec![0u8; len];
        read_exact(&mut bytes, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| TqgError::Snapshot("field name is not UTF-8".into()))?;
        let count = read_u64(&mut bytes)? as usize;
        if bytes.len() != count.saturating_mul(8) {
            return Err(TqgError::Snapshot(format!(
                "header announces {count} coefficients but {} bytes follow",
                bytes.len()
            )));
        }
        let coeffs = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        Ok(Self { n, degree, alpha, t, name, coeffs })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, meta: &SnapshotMeta) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| TqgError::Snapshot(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<SnapshotMeta> {
    let text = fs::read_to_string(sidecar_path(path))?;
    toml::from_str(&text).map_err(|e| TqgError::Snapshot(e.to_string()))
}

fn read_exact(bytes: &mut &[u8], out: &mut [u8]) -> Result<()> {
    bytes.read_exact(out).map_err(|_| TqgError::Snapshot("unexpected end of file".into()))
}

fn read_u32(bytes: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(bytes, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(bytes: &mut &[u8]) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(bytes, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
