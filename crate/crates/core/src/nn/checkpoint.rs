//! Binary checkpoint files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "MECNET\0\x01"
//! version    u32
//! spec_len   u32, followed by the network spec as JSON
//! max_edges  u32
//! alpha      f64      entropy temperature
//! n_sets     u32
//! per set:   name_len u32, name (utf-8), n_values u64, values f64 * n
//! ```

use std::fs;
use std::path::Path;

use super::params::ParamSet;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MECNET\0\x01";
pub const VERSION: u32 = 1;

/// Named parameter sets of one model plus the spec they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub alpha: f64,
    pub sets: Vec<(String, ParamSet)>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&ParamSet> {
        self.sets.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let spec = serde_json::to_vec(&self.spec).expect("spec serialises");
        out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
        out.extend_from_slice(&spec);
        out.extend_from_slice(&(self.spec.max_edges as u32).to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&(self.sets.len() as u32).to_le_bytes());
        for (name, p) in &self.sets {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(p.values.len() as u64).to_le_bytes());
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes a checkpoint; when `expected` is given the embedded spec
    /// must match it exactly.
    pub fn from_bytes(bytes: &[u8], expected: Option<&NetworkSpec>) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Incompatible(format!(
                "checkpoint version {version}, expected {VERSION}"
            )));
        }
        let spec_len = r.u32()? as usize;
        let spec: NetworkSpec =
            serde_json::from_slice(r.take(spec_len)?).map_err(|e| Error::Format(format!("spec descriptor: {e}")))?;
        let max_edges = r.u32()? as usize;
        if max_edges != spec.max_edges {
            return Err(Error::Format("E_max field disagrees with embedded spec".into()));
        }
        if let Some(want) = expected {
            if want.max_edges != spec.max_edges {
                return Err(Error::Incompatible(format!(
                    "checkpoint built for E_max={}, expected {}",
                    spec.max_edges, want.max_edges
                )));
            }
            if want != &spec {
                return Err(Error::Incompatible("network spec differs from the checkpoint".into()));
            }
        }
        let alpha = r.f64()?;
        let net = super::Network::new(spec.clone())?;
        let template = net.zero_grad();
        let n_sets = r.u32()? as usize;
        let mut sets = Vec::with_capacity(n_sets);
        for _ in 0..n_sets {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
            let n = r.u64()? as usize;
            if n != template.len() {
                return Err(Error::Format(format!(
                    "set {name} has {n} values, spec needs {}",
                    template.len()
                )));
            }
            let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            sets.push((
                name,
                ParamSet {
                    values,
                    slices: template.slices.clone(),
                },
            ));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self { spec, alpha, sets })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, expected: Option<&NetworkSpec>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, expected)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
