//! Experiment configuration. JSON files hold any subset of the fields;
//! missing fields take the defaults below and command-line flags override
//! both. `validate` checks everything before work starts.

use std::path::Path;

use rwrp_core::estimators::FitMethod;
use rwrp_core::PotentialDistribution;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitChoice {
    SlopeFit,
    LargestN,
}

impl From<FitChoice> for FitMethod {
    fn from(f: FitChoice) -> FitMethod {
        match f {
            FitChoice::SlopeFit => FitMethod::SlopeFit,
            FitChoice::LargestN => FitMethod::LargestN,
        }
    }
}

/// Block-construction parameters. `delta1 = None` means
/// `min(delta / (3d), 0.002)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub m: f64,
    pub eps0: f64,
    pub delta: f64,
    pub delta1: Option<f64>,
    pub k_prime: f64,
    /// Environments per lambda for the `certify` good-fraction.
    pub certify_seeds: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            m: 2.0,
            eps0: 0.05,
            delta: 0.01,
            delta1: None,
            k_prime: 1.0,
            certify_seeds: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn delta1_for(&self, d: usize) -> f64 {
        self.delta1.unwrap_or((self.delta / (3.0 * d as f64)).min(0.002))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapsConfig {
    /// Steps per walk; `None` means `10^4 n^2 d` at the largest `n`.
    pub step_cap: Option<u64>,
    /// Sites per certified region or exact solve.
    pub volume_cap: u64,
    /// Optional censoring tube `x_1 > -behind`, `|x_k| < half_width`.
    pub tube_behind: Option<f64>,
    pub tube_half_width: Option<f64>,
}

impl Default for CapsConfig {
    fn default() -> Self {
        CapsConfig {
            step_cap: None,
            volume_cap: 100_000_000,
            tube_behind: None,
            tube_half_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolationConfig {
    pub columns: usize,
    /// `None` means `columns`.
    pub jmax: Option<i64>,
    /// I.i.d. open probability; `None` certifies environment blocks.
    pub p_open: Option<f64>,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            columns: 20,
            jmax: None,
            p_open: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventsConfig {
    pub m_values: Vec<f64>,
    pub l: f64,
    pub replicas: u64,
    /// Sampling drift along `e_1` in units of `h / L`.
    pub drift_factor: f64,
}

impl Default for EventsConfig {
    fn default() -> Self {
        EventsConfig {
            m_values: vec![2.0, 4.0, 6.0],
            l: 30.0,
            replicas: 20_000,
            drift_factor: 1.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QdConfig {
    pub tolerance: f64,
    /// Also run the Monte Carlo estimate with this many walks.
    pub mc_walks: Option<u64>,
    pub mc_horizon: u64,
}

impl Default for QdConfig {
    fn default() -> Self {
        QdConfig {
            tolerance: 1e-10,
            mc_walks: None,
            mc_horizon: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub d: usize,
    /// Distribution grammar, e.g. `pareto:0.7,1` or `trunc(exp:1):2`.
    pub mu: String,
    pub lambdas: Vec<f64>,
    pub eps: f64,
    pub n_window: Vec<i64>,
    pub replicas: u64,
    pub env_seeds: u64,
    /// Overrides the default tilt for every lambda.
    pub tilt: Option<f64>,
    pub fit: FitChoice,
    pub workers: Option<usize>,
    pub scenario: ScenarioConfig,
    pub caps: CapsConfig,
    pub percolation: PercolationConfig,
    pub events: EventsConfig,
    pub qd: QdConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            d: 3,
            mu: "pareto:0.7,1".to_string(),
            lambdas: vec![0.1],
            eps: 0.2,
            n_window: vec![10, 20, 30, 40],
            replicas: 10_000,
            env_seeds: 16,
            tilt: None,
            fit: FitChoice::SlopeFit,
            workers: None,
            scenario: ScenarioConfig::default(),
            caps: CapsConfig::default(),
            percolation: PercolationConfig::default(),
            events: EventsConfig::default(),
            qd: QdConfig::default(),
        }
    }
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub mu: Option<String>,
    pub lambdas: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub n_window: Option<Vec<i64>>,
    pub replicas: Option<u64>,
    pub workers: Option<usize>,
}

fn positive_finite(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, format!("{x} is not finite and positive")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| LabError::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config("config", format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($f:ident => $t:ident),*) => {$(
                if let Some(v) = o.$f {
                    self.$t = v;
                }
            )*};
        }
        set!(seed => seed, d => d, mu => mu, lambdas => lambdas, eps => eps, n_window => n_window, replicas => replicas);
        if o.workers.is_some() {
            self.workers = o.workers;
        }
    }

    /// Parses the law and checks every field against the preconditions of
    /// the operations that use it.
    pub fn validate(&self) -> Result<PotentialDistribution> {
        let mu: PotentialDistribution = self
            .mu
            .parse()
            .map_err(|e: rwrp_core::Error| LabError::config("mu", e.to_string()))?;
        if !(1..=rwrp_core::MAX_DIM).contains(&self.d) {
            return Err(LabError::config(
                "d",
                format!("{} is outside 1..={}", self.d, rwrp_core::MAX_DIM),
            ));
        }
        if self.lambdas.is_empty() {
            return Err(LabError::config("lambdas", "empty"));
        }
        for &l in &self.lambdas {
            positive_finite("lambdas", l)?;
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LabError::config("eps", "must lie in (0, 1)"));
        }
        let mut ns = self.n_window.clone();
        ns.sort_unstable();
        ns.dedup();
        if ns.is_empty() || ns[0] < 1 {
            return Err(LabError::config("n_window", "need at least one n >= 1"));
        }
        if self.replicas < 2 {
            return Err(LabError::config("replicas", "need at least 2"));
        }
        if self.env_seeds < 1 {
            return Err(LabError::config("env_seeds", "need at least 1"));
        }
        if let Some(t) = self.tilt {
            if !t.is_finite() {
                return Err(LabError::config("tilt", "must be finite"));
            }
        }
        if self.workers == Some(0) {
            return Err(LabError::config("workers", "must be at least 1"));
        }
        let s = &self.scenario;
        if !(s.m >= 1.0 && s.m.is_finite()) {
            return Err(LabError::config("scenario.m", "must be >= 1"));
        }
        positive_finite("scenario.eps0", s.eps0)?;
        positive_finite("scenario.delta", s.delta)?;
        positive_finite("scenario.delta1", s.delta1_for(self.d))?;
        positive_finite("scenario.k_prime", s.k_prime)?;
        if s.certify_seeds < 1 {
            return Err(LabError::config("scenario.certify_seeds", "need at least 1"));
        }
        if self.caps.step_cap == Some(0) {
            return Err(LabError::config("caps.step_cap", "must be positive"));
        }
        for (f, v) in [
            ("caps.tube_behind", self.caps.tube_behind),
            ("caps.tube_half_width", self.caps.tube_half_width),
        ] {
            if let Some(v) = v {
                positive_finite(f, v)?;
            }
        }
        let p = &self.percolation;
        if p.columns < 1 || p.jmax.is_some_and(|j| j < 1) {
            return Err(LabError::config("percolation", "need columns >= 1 and jmax >= 1"));
        }
        if p.p_open.is_some_and(|q| !(0.0..=1.0).contains(&q)) {
            return Err(LabError::config("percolation.p_open", "must lie in [0, 1]"));
        }
        let e = &self.events;
        if e.m_values.iter().any(|&m| !(m >= 1.0 && m.is_finite())) {
            return Err(LabError::config("events.m_values", "each M must be >= 1"));
        }
        positive_finite("events.l", e.l)?;
        positive_finite("events.drift_factor", e.drift_factor)?;
        if e.replicas < 2 {
            return Err(LabError::config("events.replicas", "need at least 2"));
        }
        positive_finite("qd.tolerance", self.qd.tolerance)?;
        Ok(mu)
    }

    /// The window sorted and deduplicated.
    pub fn window(&self) -> Vec<i64> {
        let mut ns = self.n_window.clone();
        ns.sort_unstable();
        ns.dedup();
        ns
    }
}
