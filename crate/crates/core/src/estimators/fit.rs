//! Slope extraction from passage costs.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use super::PassageCost;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Weighted least squares of cost against `n` with an intercept.
    SlopeFit,
    /// `cost / n` at the largest `n`.
    LargestN,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub alpha: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub window: Vec<i64>,
    pub per_n: Vec<PassageCost>,
    pub method: FitMethod,
}

/// Fits `value ~ alpha n + c`. Weights are `1 / stderr^2` when every
/// point carries a positive standard error, otherwise uniform. The slope
/// error is inflated by `sqrt(chi2 / dof)` when the points scatter more than
/// their error bars allow.
pub fn fit_exponent(costs: &[PassageCost], method: FitMethod) -> Result<ExponentEstimate> {
    let mut ns: Vec<i64> = costs.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::param("window", "need at least 3 distinct n"));
    }
    if costs.iter().any(|c| !c.value.is_finite()) {
        return Err(Error::param("costs", "non-finite cost"));
    }
    let window: Vec<i64> = costs.iter().map(|c| c.n).collect();
    let (alpha, stderr, intercept) = match method {
        FitMethod::LargestN => {
            let c = costs.iter().max_by_key(|c| c.n).unwrap();
            let n = c.n as f64;
            (c.value / n, c.stderr / n, 0.0)
        }
        FitMethod::SlopeFit => {
            let weighted = costs.iter().all(|c| c.stderr > 0.0 && c.stderr.is_finite());
            let w: Vec<f64> = costs
                .iter()
                .map(|c| if weighted { 1.0 / (c.stderr * c.stderr) } else { 1.0 })
                .collect();
            let sw: f64 = w.iter().sum();
            let xm = costs.iter().zip(&w).map(|(c, w)| w * c.n as f64).sum::<f64>() / sw;
            let ym = costs.iter().zip(&w).map(|(c, w)| w * c.value).sum::<f64>() / sw;
            let sxx: f64 = costs.iter().zip(&w).map(|(c, w)| w * (c.n as f64 - xm).powi(2)).sum();
            let sxy: f64 = costs
                .iter()
                .zip(&w)
                .map(|(c, w)| w * (c.n as f64 - xm) * (c.value - ym))
                .sum();
            let slope = sxy / sxx;
            let icpt = ym - slope * xm;
            let dof = (costs.len() - 2) as f64;
            let chi2: f64 = costs
                .iter()
                .zip(&w)
                .map(|(c, w)| w * (c.value - icpt - slope * c.n as f64).powi(2))
                .sum();
            let se = if weighted {
                (1.0 / sxx).sqrt() * (chi2 / dof).max(1.0).sqrt()
            } else {
                (chi2 / dof / sxx).sqrt()
            };
            (slope, se, icpt)
        }
    };
    if alpha < 0.0 {
        return Err(Error::Statistical {
            reason: alloc::format!("negative fitted exponent {alpha}"),
        });
    }
    Ok(ExponentEstimate {
        alpha,
        stderr,
        intercept,
        window,
        per_n: costs.to_vec(),
        method,
    })
}
