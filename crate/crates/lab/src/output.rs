//! Output files. Cost tables share one CSV schema; reports are JSON with
//! struct field order.

use std::path::Path;

use rwrp_core::estimators::PassageCost;
use serde::Serialize;

use crate::error::{LabError, Result};

/// `mu,lambda,eps,d,n,kind,value,stderr,censored,replicas,seed`, where
/// `censored` is the censored mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRow {
    pub mu: String,
    pub lambda: f64,
    pub eps: f64,
    pub d: usize,
    pub n: i64,
    pub kind: String,
    pub value: f64,
    pub stderr: f64,
    pub censored: f64,
    pub replicas: u64,
    pub seed: u64,
}

/// Fields shared by the rows of one run.
#[derive(Clone, Debug)]
pub struct RowContext {
    pub mu: String,
    pub lambda: f64,
    pub eps: f64,
    pub d: usize,
    pub seed: u64,
}

impl RowContext {
    pub fn cost(&self, kind: &str, c: &PassageCost) -> CostRow {
        CostRow {
            mu: self.mu.clone(),
            lambda: self.lambda,
            eps: self.eps,
            d: self.d,
            n: c.n,
            kind: kind.to_string(),
            value: c.value,
            stderr: c.stderr,
            censored: c.censored_mass,
            replicas: c.replicas,
            seed: self.seed,
        }
    }

    pub fn value(&self, kind: &str, n: i64, value: f64, stderr: f64, replicas: u64) -> CostRow {
        CostRow {
            mu: self.mu.clone(),
            lambda: self.lambda,
            eps: self.eps,
            d: self.d,
            n,
            kind: kind.to_string(),
            value,
            stderr,
            censored: 0.0,
            replicas,
            seed: self.seed,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::config("out", format!("{other:?}")),
    })?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| LabError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}
