//! On-disk cache of lattice constants, `qd.cache` in the output directory.
//! The file is JSON with a format version; an unreadable file or another
//! version is treated as empty and rewritten.

use std::path::{Path, PathBuf};

use rwrp_core::walk::green::green_quadrature;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_FILE: &str = "qd.cache";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub d: usize,
    pub method: String,
    pub tolerance: f64,
    pub q_d: f64,
    pub green_at_origin: f64,
    pub error: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    entries: Vec<CacheEntry>,
}

pub struct QdCache {
    path: PathBuf,
    file: CacheFile,
}

impl QdCache {
    pub fn open(dir: &Path) -> QdCache {
        let path = dir.join(CACHE_FILE);
        let file = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<CacheFile>(&t).ok())
            .filter(|f| f.version == CACHE_VERSION)
            .unwrap_or(CacheFile {
                version: CACHE_VERSION,
                entries: Vec::new(),
            });
        QdCache { path, file }
    }

    pub fn get(&self, d: usize, method: &str, tolerance: f64) -> Option<&CacheEntry> {
        self.file
            .entries
            .iter()
            .find(|e| e.d == d && e.method == method && e.tolerance.to_bits() == tolerance.to_bits())
    }

    pub fn insert(&mut self, e: CacheEntry) {
        self.file
            .entries
            .retain(|x| !(x.d == e.d && x.method == e.method && x.tolerance.to_bits() == e.tolerance.to_bits()));
        self.file.entries.push(e);
    }

    pub fn save(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.file)?;
        std::fs::write(&self.path, text).map_err(|e| LabError::io(&self.path, e))
    }

    /// Quadrature `q_d`, computed once per `(d, tolerance)`. Returns the
    /// entry and whether it came from the cache.
    pub fn quadrature(&mut self, d: usize, tolerance: f64) -> Result<(CacheEntry, bool)> {
        if let Some(e) = self.get(d, "quadrature", tolerance) {
            return Ok((e.clone(), true));
        }
        let (g, err) = green_quadrature(d, tolerance)?;
        let e = CacheEntry {
            d,
            method: "quadrature".into(),
            tolerance,
            q_d: 1.0 / g,
            green_at_origin: g,
            error: err / (g * g),
        };
        self.insert(e.clone());
        self.save()?;
        Ok((e, false))
    }
}

/// `q_d` for the saturation function: quadrature for `d >= 3`, and `1`
/// (each site visited once) below, where the walk is recurrent and only a
/// tilt is derived from it.
pub fn q_for_tilt(cache: Option<&mut QdCache>, d: usize, tolerance: f64) -> Result<f64> {
    if d < 3 {
        return Ok(1.0);
    }
    match cache {
        Some(c) => Ok(c.quadrature(d, tolerance)?.0.q_d),
        None => Ok(1.0 / green_quadrature(d, tolerance)?.0),
    }
}
