//! Estimators of the point-to-hyperplane passage costs `-ln Z_n`, the exact
//! finite-box oracle, the `d = 1` enumeration oracle and slope extraction.

mod enumerate;
mod exact;
mod fit;

pub use enumerate::{enumerate_annealed, Bracket};
pub use exact::{exact_passage, exact_passage_converged, ConvergedPassage, ExactOptions, ExactSolution, PassageBox};
pub use fit::{fit_exponent, ExponentEstimate, FitMethod};

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rustc_hash::FxBuildHasher;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Executor};
use crate::field::{Environment, EnvironmentField};
use crate::potential::PotentialDistribution;
use crate::rng::{derive_key, replica_rng, tags};
use crate::site::{OpenBox, Site};
use crate::walk::{Stepper, WalkConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PassageCost {
    pub n: i64,
    /// `-ln` of the estimated `Z_n`.
    pub value: f64,
    pub stderr: f64,
    /// Estimated weight lost to the step cap or the tube, in units of `Z`.
    /// Censored replicas contribute zero, so the estimate is a lower bound
    /// on `Z` (an upper bound on the cost).
    pub censored_mass: f64,
    pub censored: u64,
    pub replicas: u64,
}

impl PassageCost {
    pub fn z(&self) -> f64 {
        (-self.value).exp()
    }
}

/// Replica budget and stop geometry for a Monte Carlo cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSetup {
    pub replicas: u64,
    pub seed: u64,
    pub tube: Option<OpenBox>,
}

impl McSetup {
    pub fn new(replicas: u64, seed: u64) -> McSetup {
        McSetup {
            replicas,
            seed,
            tube: None,
        }
    }
}

/// Per-replica result: log importance weight and censoring flag.
type Sample = (f64, bool);

fn reduce(n: i64, samples: &[Sample]) -> Result<PassageCost> {
    let replicas = samples.len() as u64;
    let censored = samples.iter().filter(|s| s.1).count() as u64;
    if censored == replicas {
        return Err(Error::AllCensored { replicas });
    }
    let shift = samples
        .iter()
        .filter(|s| !s.1)
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut s1, mut s2, mut lost) = (0.0, 0.0, 0.0);
    for &(lw, c) in samples {
        if c {
            lost += lw.exp();
        } else {
            let w = (lw - shift).exp();
            s1 += w;
            s2 += w * w;
        }
    }
    let r = replicas as f64;
    let mean = s1 / r;
    let var = ((s2 / r - mean * mean) * r / (r - 1.0).max(1.0)).max(0.0);
    let se = (var / r).sqrt();
    Ok(PassageCost {
        n,
        value: -(shift + mean.ln()),
        stderr: se / mean,
        censored_mass: lost / r,
        censored,
        replicas,
    })
}

fn check_common(lambda: f64, n: i64, setup: &McSetup) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    if n < 1 {
        return Err(Error::param("n", "need n >= 1"));
    }
    if setup.replicas < 2 {
        return Err(Error::param("replicas", "need at least 2"));
    }
    Ok(())
}

/// `ln L(lambda k)` for `k = 0..len`, with `L` the Laplace transform of `mu`.
struct LaplaceTable {
    mu: PotentialDistribution,
    lambda: f64,
    table: Vec<f64>,
}

impl LaplaceTable {
    fn new(mu: &PotentialDistribution, lambda: f64, len: usize) -> Result<LaplaceTable> {
        let mut table = Vec::with_capacity(len + 1);
        for k in 0..=len {
            table.push(mu.laplace(lambda * k as f64)?.ln());
        }
        Ok(LaplaceTable {
            mu: mu.clone(),
            lambda,
            table,
        })
    }

    #[inline]
    fn get(&self, k: u32) -> f64 {
        match self.table.get(k as usize) {
            Some(&v) => v,
            None => self
                .mu
                .laplace(self.lambda * k as f64)
                .map(|x| x.ln())
                .unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// `ln L(lambda (k + 1)) - ln L(lambda k)`, the log-cost of one more visit.
    #[inline]
    fn increment(&self, k: u32) -> f64 {
        self.get(k + 1) - self.get(k)
    }
}

/// Annealed cost `-ln E E_0[exp(-lambda sum_{k < T_n} V(X_k))]`. The
/// environment average is exact: given the walk, it factorises over sites
/// into `prod_x L(lambda l_x)`. Only the walk is sampled, under the tilt of
/// `cfg`.
pub fn annealed_cost<X: Executor + ?Sized>(
    mu: &PotentialDistribution,
    lambda: f64,
    n: i64,
    cfg: &WalkConfig,
    setup: &McSetup,
    exec: &X,
) -> Result<PassageCost> {
    check_common(lambda, n, setup)?;
    if lambda == 0.0 {
        // Z = 1 exactly: T_n is finite almost surely
        return Ok(PassageCost {
            n,
            value: 0.0,
            stderr: 0.0,
            censored_mass: 0.0,
            censored: 0,
            replicas: setup.replicas,
        });
    }
    let table = LaplaceTable::new(mu, lambda, 256)?;
    let key = derive_key(setup.seed, &[tags::ANNEALED, n as u64]);
    let lnm = cfg.log_mgf();
    let samples = exec::replicas(exec, setup.replicas, |r| {
        let mut rng = replica_rng(key, r);
        let mut st = Stepper::new(cfg);
        let mut local: hashbrown::HashMap<Site, u32, FxBuildHasher> = hashbrown::HashMap::with_hasher(FxBuildHasher);
        let mut x = Site::ORIGIN;
        let mut steps = 0u64;
        let mut lw = 0.0;
        let censored = loop {
            if x.0[0] as i64 >= n {
                break false;
            }
            if steps >= cfg.step_cap || setup.tube.is_some_and(|t| !t.contains(&x)) {
                break true;
            }
            let k = local.entry(x).or_insert(0);
            lw += table.increment(*k);
            *k += 1;
            Stepper::apply(&mut x, st.draw(&mut rng));
            steps += 1;
        };
        (lw + steps as f64 * lnm - cfg.tilt * x.0[0] as f64, censored)
    });
    reduce(n, &samples)
}

/// Quenched cost `-ln E_0[exp(-lambda sum_{k < T_n} V(X_k))]` in a frozen
/// environment.
pub fn quenched_cost<E: Environment + ?Sized, X: Executor + ?Sized>(
    env: &E,
    lambda: f64,
    n: i64,
    cfg: &WalkConfig,
    setup: &McSetup,
    exec: &X,
) -> Result<PassageCost> {
    check_common(lambda, n, setup)?;
    if env.dim() != cfg.dim {
        return Err(Error::param("d", "walk and environment dimensions differ"));
    }
    let key = derive_key(setup.seed, &[tags::QUENCHED, n as u64]);
    let lnm = cfg.log_mgf();
    let samples = exec::replicas(exec, setup.replicas, |r| {
        let mut rng = replica_rng(key, r);
        let mut st = Stepper::new(cfg);
        let mut x = Site::ORIGIN;
        let mut steps = 0u64;
        let mut cost = 0.0;
        let censored = loop {
            if x.0[0] as i64 >= n {
                break false;
            }
            if steps >= cfg.step_cap || setup.tube.is_some_and(|t| !t.contains(&x)) {
                break true;
            }
            cost += env.value(&x);
            Stepper::apply(&mut x, st.draw(&mut rng));
            steps += 1;
        };
        (steps as f64 * lnm - cfg.tilt * x.0[0] as f64 - lambda * cost, censored)
    });
    reduce(n, &samples)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuenchedSweep {
    pub estimate: ExponentEstimate,
    pub env_seeds: Vec<u64>,
    /// `per_seed[i][j]`: environment `env_seeds[i]` at `window[j]`.
    pub per_seed: Vec<Vec<PassageCost>>,
    /// Standard deviation of the per-environment costs at each `n`.
    pub seed_scatter: Vec<f64>,
}

impl QuenchedSweep {
    /// `mean_i(-ln Z_i) - (-ln mean_i Z_i)` at window position `j`; never
    /// negative by Jensen's inequality.
    pub fn jensen_gap(&self, j: usize) -> f64 {
        let k = self.per_seed.len() as f64;
        let mean_cost: f64 = self.per_seed.iter().map(|c| c[j].value).sum::<f64>() / k;
        let shift = self
            .per_seed
            .iter()
            .map(|c| -c[j].value)
            .fold(f64::NEG_INFINITY, f64::max);
        let mean_z: f64 = self.per_seed.iter().map(|c| (-c[j].value - shift).exp()).sum::<f64>() / k;
        mean_cost - (-(shift + mean_z.ln()))
    }
}

/// Quenched exponent: per-environment costs averaged over `env_seeds` at
/// each `n` of the window, then fitted. Seed scatter is a diagnostic only.
#[allow(clippy::too_many_arguments)]
pub fn quenched_alpha<X: Executor + ?Sized>(
    env_seeds: &[u64],
    mu: &PotentialDistribution,
    lambda: f64,
    window: &[i64],
    cfg: &WalkConfig,
    setup: &McSetup,
    method: FitMethod,
    exec: &X,
) -> Result<QuenchedSweep> {
    if env_seeds.is_empty() {
        return Err(Error::param("env_seeds", "need at least one environment"));
    }
    let mut per_seed = Vec::with_capacity(env_seeds.len());
    for &s in env_seeds {
        let env = EnvironmentField::new(s, mu.clone(), cfg.dim)?;
        let sub = McSetup {
            seed: derive_key(setup.seed, &[tags::ENVIRONMENT, s]),
            ..*setup
        };
        let row = window
            .iter()
            .map(|&n| quenched_cost(&env, lambda, n, cfg, &sub, exec))
            .collect::<Result<Vec<_>>>()?;
        per_seed.push(row);
    }
    let k = env_seeds.len() as f64;
    let mut averaged = Vec::with_capacity(window.len());
    let mut scatter = Vec::with_capacity(window.len());
    for (j, &n) in window.iter().enumerate() {
        let vals: Vec<f64> = per_seed.iter().map(|r: &Vec<PassageCost>| r[j].value).collect();
        let mean = vals.iter().sum::<f64>() / k;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        scatter.push(var.sqrt());
        averaged.push(PassageCost {
            n,
            value: mean,
            stderr: per_seed.iter().map(|r| r[j].stderr * r[j].stderr).sum::<f64>().sqrt() / k,
            censored_mass: per_seed.iter().map(|r| r[j].censored_mass).sum::<f64>() / k,
            censored: per_seed.iter().map(|r| r[j].censored).sum(),
            replicas: per_seed.iter().map(|r| r[j].replicas).sum(),
        });
    }
    let estimate = fit_exponent(&averaged, method)?;
    Ok(QuenchedSweep {
        estimate,
        env_seeds: env_seeds.to_vec(),
        per_seed,
        seed_scatter: scatter,
    })
}

/// Annealed exponent over a window of `n`.
pub fn annealed_alpha<X: Executor + ?Sized>(
    mu: &PotentialDistribution,
    lambda: f64,
    window: &[i64],
    cfg: &WalkConfig,
    setup: &McSetup,
    method: FitMethod,
    exec: &X,
) -> Result<ExponentEstimate> {
    let costs = window
        .iter()
        .map(|&n| annealed_cost(mu, lambda, n, cfg, setup, exec))
        .collect::<Result<Vec<_>>>()?;
    fit_exponent(&costs, method)
}
