//! Hitting probabilities and visit counts inside Euclidean balls.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rustc_hash::FxBuildHasher;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{fold_replicas, Executor, Moments};
use crate::rng::{derive_key, replica_rng, tags, Digits};
use crate::site::Site;
use crate::walk::{Stepper, WalkConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_moments(m: &Moments) -> Estimate {
        Estimate {
            value: m.mean(),
            stderr: m.stderr(),
            samples: m.n,
        }
    }
}

fn untilted(cfg: &WalkConfig) -> Result<()> {
    if cfg.tilt != 0.0 {
        return Err(Error::param("tilt", "hitting estimators use the untilted walk"));
    }
    Ok(())
}

/// One untilted step from `x`, keeping `|x|^2` up to date.
#[inline]
fn step(x: &mut Site, n2: &mut i64, dir: usize) {
    let axis = dir >> 1;
    let c = x.0[axis] as i64;
    *n2 += if dir & 1 == 0 { 2 * c + 1 } else { 1 - 2 * c };
    Stepper::apply(x, dir);
}

/// Estimate of `P_0[T_x < tau_r]`, where `tau_r` is the first time
/// `|X| > r`.
pub fn hit_before_exit<X: Executor + ?Sized>(
    cfg: &WalkConfig,
    x: &Site,
    r: f64,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<Estimate> {
    untilted(cfg)?;
    let r2 = r * r;
    let x2 = x.norm_sq() as f64;
    if !(x2 > 0.0 && x2 < r2) {
        return Err(Error::param("x", format!("need 0 < |x| < r = {r}")));
    }
    let d = cfg.dim;
    let key = derive_key(seed, &[tags::HIT]);
    let target = *x;
    let m = fold_replicas(
        exec,
        replicas,
        Moments::default,
        |acc, rep| {
            let mut rng = replica_rng(key, rep);
            let mut dg = Digits::new(2 * d as u64);
            let mut p = Site::ORIGIN;
            let mut n2 = 0i64;
            let hit = loop {
                step(&mut p, &mut n2, dg.next(&mut rng));
                if p == target {
                    break true;
                }
                if n2 as f64 > r2 {
                    break false;
                }
            };
            acc.push(hit as u8 as f64);
        },
        |a, b| a.merge(b),
    );
    Ok(Estimate::from_moments(&m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitSampling {
    /// Start at the origin and keep the runs that visit `x`.
    Direct { min_samples: u64 },
    /// Start at `x`. By the strong Markov property at `T_x` this samples
    /// the conditional law exactly, with every replica contributing.
    Restart,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitHistogram {
    /// `counts[k - 1]` is the number of samples with exactly `k` visits.
    pub counts: Vec<u64>,
    pub samples: u64,
    pub attempted: u64,
    pub mean: f64,
    pub stderr: f64,
}

impl VisitHistogram {
    /// Empirical `P[N >= k | N >= 1]`.
    pub fn tail(&self, k: usize) -> f64 {
        if k <= 1 {
            return 1.0;
        }
        let above: u64 = self.counts.iter().skip(k - 1).sum();
        above as f64 / self.samples as f64
    }
}

/// Number of visits to `x` before `tau_r`, conditioned on at least one.
pub fn visit_histogram<X: Executor + ?Sized>(
    cfg: &WalkConfig,
    x: &Site,
    r: f64,
    replicas: u64,
    seed: u64,
    mode: VisitSampling,
    exec: &X,
) -> Result<VisitHistogram> {
    untilted(cfg)?;
    let r2 = r * r;
    if x.norm_sq() as f64 >= r2 {
        return Err(Error::InsufficientData {
            reason: format!("x lies on or beyond the stopping sphere of radius {r}"),
        });
    }
    let d = cfg.dim;
    let key = derive_key(seed, &[tags::VISITS]);
    let start = match mode {
        VisitSampling::Direct { .. } => Site::ORIGIN,
        VisitSampling::Restart => *x,
    };
    let target = *x;
    let counts: Vec<u64> = fold_replicas(
        exec,
        replicas,
        Vec::new,
        |acc: &mut Vec<u64>, rep| {
            let mut rng = replica_rng(key, rep);
            let mut dg = Digits::new(2 * d as u64);
            let mut p = start;
            let mut n2 = p.norm_sq();
            let mut visits = (p == target) as usize;
            loop {
                step(&mut p, &mut n2, dg.next(&mut rng));
                if n2 as f64 > r2 {
                    break;
                }
                if p == target {
                    visits += 1;
                }
            }
            if acc.len() <= visits {
                acc.resize(visits + 1, 0);
            }
            acc[visits] += 1;
        },
        |a, b| {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        },
    );
    let mut m = Moments::default();
    let mut out = Vec::new();
    for (k, &c) in counts.iter().enumerate().skip(1) {
        out.push(c);
        m.n += c;
        m.sum += (k as f64) * c as f64;
        m.sum_sq += (k * k) as f64 * c as f64;
    }
    let needed = match mode {
        VisitSampling::Direct { min_samples } => min_samples.max(2),
        VisitSampling::Restart => 2,
    };
    if m.n < needed {
        return Err(Error::InsufficientData {
            reason: format!("{} conditioned samples, need {needed}", m.n),
        });
    }
    Ok(VisitHistogram {
        counts: out,
        samples: m.n,
        attempted: replicas,
        mean: m.mean(),
        stderr: m.stderr(),
    })
}

/// `sum_{0 < |x| < r} P_0[T_x < tau_r]`, estimated as the mean number of
/// distinct such sites visited before `tau_r`.
pub fn sum_hit_probabilities<X: Executor + ?Sized>(
    cfg: &WalkConfig,
    r: f64,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<Estimate> {
    untilted(cfg)?;
    if !(r >= 10.0) {
        return Err(Error::param("r", "need r >= 10"));
    }
    let d = cfg.dim;
    let r2 = r * r;
    let key = derive_key(seed, &[tags::RANGE]);
    let m = fold_replicas(
        exec,
        replicas,
        Moments::default,
        |acc, rep| {
            let mut rng = replica_rng(key, rep);
            let mut dg = Digits::new(2 * d as u64);
            let mut seen: hashbrown::HashSet<Site, FxBuildHasher> = hashbrown::HashSet::with_hasher(FxBuildHasher);
            let mut p = Site::ORIGIN;
            let mut n2 = 0i64;
            loop {
                step(&mut p, &mut n2, dg.next(&mut rng));
                let f = n2 as f64;
                if f > r2 {
                    break;
                }
                if f < r2 && n2 > 0 {
                    seen.insert(p);
                }
            }
            acc.push(seen.len() as f64);
        },
        |a, b| a.merge(b),
    );
    Ok(Estimate::from_moments(&m))
}
