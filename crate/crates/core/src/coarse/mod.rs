//! Coarse graining at scale `L`: value partition, box certification,
//! healthy points, generic pairs and the scenario events.

mod certify;
mod events;
mod healthy;
mod partition;

pub use certify::{certify_region, region_is_good, BoxEntry, BoxVerdict, GoodnessParams, GoodnessReport, Mode};
pub use events::{
    check_event, check_path, plane_sigma_index, sample_events, ChiScaling, EventContext, EventKind, EventRates,
    Geometry,
};
pub use healthy::{generic_score, is_healthy, GenericOptions, GenericTable, HealthReport, ScoreBin, Widening};
pub use partition::{partition, IntervalPartition};

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::site::check_dim;

/// Scale and accuracy parameters of the block construction, with
/// `0 < delta1 <= delta / (3d)`, `delta <= eps0 / 2` and `eps0 <= eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScenarioParams {
    pub d: usize,
    pub m: f64,
    pub eps: f64,
    pub eps0: f64,
    pub delta: f64,
    pub delta1: f64,
    pub lambda: f64,
    pub l: f64,
}

impl ScenarioParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        m: f64,
        eps: f64,
        eps0: f64,
        delta: f64,
        delta1: f64,
        lambda: f64,
        l: f64,
    ) -> Result<ScenarioParams> {
        check_dim(d)?;
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::param("M", "must be finite and >= 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param("eps", "must lie in (0, 1)"));
        }
        if !(eps0 > 0.0 && eps0 <= eps) {
            return Err(Error::param("eps0", "need 0 < eps0 <= eps"));
        }
        if !(delta > 0.0 && delta <= eps0 / 2.0) {
            return Err(Error::param("delta", "need 0 < delta <= eps0 / 2"));
        }
        if !(delta1 > 0.0 && delta1 <= delta / (3.0 * d as f64)) {
            return Err(Error::param("delta1", "need 0 < delta1 <= delta / (3d)"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", "must be finite and positive"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param("L", "must be finite and positive"));
        }
        Ok(ScenarioParams {
            d,
            m,
            eps,
            eps0,
            delta,
            delta1,
            lambda,
            l,
        })
    }

    /// `eps = 0.2`, `eps0 = 0.05`, `delta = 0.01`, `delta1 = min(delta / (3d), 0.002)`.
    pub fn defaults(d: usize, m: f64, lambda: f64, l: f64) -> Result<ScenarioParams> {
        let delta = 0.01;
        ScenarioParams::new(d, m, 0.2, 0.05, delta, (delta / (3.0 * d as f64)).min(0.002), lambda, l)
    }

    /// Direction parameter `h = 1 / sqrt(d)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.d as f64).sqrt()
    }

    /// Values at or above this are important.
    pub fn threshold(&self) -> f64 {
        self.eps / self.lambda
    }

    /// Sigma radius `eps0 * L`.
    pub fn sigma_radius(&self) -> f64 {
        self.eps0 * self.l
    }
}
