use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashSet;
#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;
use rustc_hash::FxBuildHasher;
use serde::Serialize;

use super::ScenarioParams;
use crate::error::{Error, Result};
use crate::exec::{replicas, Executor, Moments};
use crate::field::{Environment, DEFAULT_VOLUME_CAP};
use crate::rng::{derive_key, replica_rng, tags, Digits};
use crate::site::{Site, SiteBox, MAX_DIM};
use crate::walk::{Estimate, Stepper};

type SiteSet = HashSet<Site, FxBuildHasher>;

/// Important sites `z` with `r_in <= |z - x| < r_out`.
fn important_shell<E: Environment + ?Sized>(
    env: &E,
    x: &Site,
    r_in: f64,
    r_out: f64,
    threshold: f64,
) -> Result<SiteSet> {
    let d = env.dim();
    let h = r_out.ceil() as i32;
    let mut lo = [0i32; MAX_DIM];
    let mut hi = [0i32; MAX_DIM];
    for k in 0..d {
        lo[k] = x.0[k] - h;
        hi[k] = x.0[k] + h;
    }
    let bx = SiteBox {
        dim: d,
        lo: Site(lo),
        hi: Site(hi),
    };
    if bx.volume() > DEFAULT_VOLUME_CAP {
        return Err(Error::ResourceCap {
            what: "shell scan volume",
            requested: bx.volume(),
            cap: DEFAULT_VOLUME_CAP,
        });
    }
    let (in2, out2) = (r_in * r_in, r_out * r_out);
    Ok(bx
        .iter()
        .filter(|z| {
            let r2 = z.dist_sq(x) as f64;
            r2 >= in2 && r2 < out2 && env.value(z) >= threshold
        })
        .collect())
}

/// Runs an untilted walk from `start` until it visits `targets` (true) or
/// reaches distance `radius` from `centre` (false). Returns the stop site.
fn walk_until<R: RngCore + ?Sized>(
    rng: &mut R,
    dg: &mut Digits,
    start: Site,
    centre: &Site,
    radius: f64,
    targets: &SiteSet,
) -> (bool, Site) {
    let r2 = radius * radius;
    let mut p = start;
    loop {
        if targets.contains(&p) {
            return (true, p);
        }
        if p.dist_sq(centre) as f64 >= r2 {
            return (false, p);
        }
        Stepper::apply(&mut p, dg.next(rng));
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 1.0) {
        return Err(Error::param("eps0*L", alloc::format!("{r} < 1")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HealthReport {
    /// Important sites within `eps0 delta L` of the start.
    pub important: usize,
    /// Estimate of hitting one of them before `sigma`.
    pub probability: Estimate,
    /// `delta^{1/4}`.
    pub threshold: f64,
    pub healthy: bool,
}

/// Estimates the probability that the walk from `x` hits an important
/// point within `eps0 delta L` of `x` before leaving `B(x, eps0 L)`.
pub fn is_healthy<E: Environment + ?Sized, X: Executor + ?Sized>(
    env: &E,
    x: &Site,
    p: &ScenarioParams,
    reps: u64,
    seed: u64,
    exec: &X,
) -> Result<HealthReport> {
    if env.dim() != p.d {
        return Err(Error::param("d", "differs from the environment"));
    }
    let radius = p.sigma_radius();
    check_radius(radius)?;
    let near = p.eps0 * p.delta * p.l;
    let targets = important_shell(env, x, 0.0, near + 1e-9, p.threshold())?;
    let threshold = p.delta.powf(0.25);
    if targets.is_empty() {
        return Ok(HealthReport {
            important: 0,
            probability: Estimate {
                value: 0.0,
                stderr: 0.0,
                samples: 0,
            },
            threshold,
            healthy: true,
        });
    }
    let key = derive_key(seed, &[tags::HEALTHY]);
    let d = p.d as u64;
    let hits = replicas(exec, reps, |rep| {
        let mut rng = replica_rng(key, rep);
        let mut dg = Digits::new(2 * d);
        walk_until(&mut rng, &mut dg, *x, x, radius, &targets).0
    });
    let mut m = Moments::default();
    hits.iter().for_each(|&h| m.push(h as u8 as f64));
    let probability = Estimate::from_moments(&m);
    Ok(HealthReport {
        important: targets.len(),
        probability,
        threshold,
        healthy: probability.value < threshold,
    })
}

/// Budget for [`generic_score`]. Exit points are binned by the face of the
/// cube hit by the exit direction and a `bins_per_side^(d-1)` grid on that
/// face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GenericOptions {
    pub outer: u64,
    pub inner: u64,
    pub bins_per_side: u32,
    pub min_per_bin: u64,
    pub seed: u64,
}

impl GenericOptions {
    /// `bins_per_side = ceil(0.1 / eps0)`, so the bin count scales as
    /// `eps0^{-(d-1)}`.
    pub fn new(p: &ScenarioParams, outer: u64, inner: u64, seed: u64) -> GenericOptions {
        GenericOptions {
            outer,
            inner,
            bins_per_side: (0.1 / p.eps0).ceil().max(1.0) as u32,
            min_per_bin: 30,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Widening {
    None,
    /// Too few samples; the whole face was pooled.
    Face,
    /// Too few samples on the face; all exits were pooled.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreBin {
    /// `2 * axis + (1 if negative)`.
    pub face: u32,
    pub cell: Vec<u32>,
    pub samples: u64,
    pub score: Estimate,
    pub widened: Widening,
    pub generic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericTable {
    pub start: Vec<i64>,
    /// `eps0^2 delta^{1/3}`.
    pub threshold: f64,
    pub bins_per_side: u32,
    pub important: usize,
    pub bins: Vec<ScoreBin>,
    pub overall: Estimate,
    /// Fraction of exits that landed in a non-generic bin.
    pub nongeneric_mass: f64,
}

fn bin_of(u: &Site, d: usize, b: u32) -> usize {
    let mut axis = 0;
    for k in 1..d {
        if u.0[k].abs() > u.0[axis].abs() {
            axis = k;
        }
    }
    let a = u.0[axis];
    let face = 2 * axis + (a < 0) as usize;
    let mut cell = 0usize;
    for k in (0..d).filter(|&k| k != axis) {
        let t = u.0[k] as f64 / a.abs() as f64;
        let c = (((t + 1.0) / 2.0 * b as f64) as u32).min(b - 1);
        cell = cell * b as usize + c as usize;
    }
    face * (b as usize).pow(d as u32 - 1) + cell
}

impl GenericTable {
    /// Whether `(x, y)` is generic under this table, with `x` its start.
    pub fn is_generic(&self, y: &Site) -> bool {
        let d = self.start.len();
        let mut u = *y;
        for k in 0..d {
            u.0[k] -= self.start[k] as i32;
        }
        if u.norm_sq() == 0 {
            return self.overall.value < self.threshold;
        }
        self.bins[bin_of(&u, d, self.bins_per_side)].generic
    }
}

/// Nested estimate of the probability of hitting an important point in
/// `B(x, L(eps0 + 2 delta)) \ B(x, L(eps0 - delta))` given the exit point
/// `X_sigma`. Each outer walk runs to `sigma`; when it has not hit, `inner`
/// continuations from `X_sigma` run until distance `L(eps0 + 2 delta)` and
/// the outer score is their hit fraction. Scores are averaged per exit bin.
pub fn generic_score<E: Environment + ?Sized, X: Executor + ?Sized>(
    env: &E,
    x: &Site,
    p: &ScenarioParams,
    o: &GenericOptions,
    exec: &X,
) -> Result<GenericTable> {
    if env.dim() != p.d {
        return Err(Error::param("d", "differs from the environment"));
    }
    if o.outer == 0 || o.bins_per_side == 0 {
        return Err(Error::param("outer", "need at least one outer walk and one bin"));
    }
    let d = p.d;
    let radius = p.sigma_radius();
    check_radius(radius)?;
    let r_in = p.l * (p.eps0 - p.delta);
    let r_out = p.l * (p.eps0 + 2.0 * p.delta);
    let targets = important_shell(env, x, r_in, r_out, p.threshold())?;
    let key = derive_key(o.seed, &[tags::GENERIC]);
    let samples = replicas(exec, o.outer, |rep| {
        let mut rng = replica_rng(key, rep);
        let mut dg = Digits::new(2 * d as u64);
        let (hit, mut y) = walk_until(&mut rng, &mut dg, *x, x, radius, &targets);
        if hit {
            // keep walking to the sigma exit for the bin
            let none = SiteSet::default();
            y = walk_until(&mut rng, &mut dg, y, x, radius, &none).1;
        }
        let score = if hit {
            1.0
        } else if targets.is_empty() || o.inner == 0 {
            0.0
        } else {
            let h = (0..o.inner)
                .filter(|_| walk_until(&mut rng, &mut dg, y, x, r_out, &targets).0)
                .count();
            h as f64 / o.inner as f64
        };
        (bin_of(&y.minus(x), d, o.bins_per_side), score)
    });
    let b = o.bins_per_side as usize;
    let per_face = b.pow(d as u32 - 1);
    let mut bins = vec![Moments::default(); 2 * d * per_face];
    let mut overall = Moments::default();
    for &(i, s) in &samples {
        bins[i].push(s);
        overall.push(s);
    }
    let faces: Vec<Moments> = (0..2 * d)
        .map(|f| {
            let mut m = Moments::default();
            bins[f * per_face..(f + 1) * per_face].iter().for_each(|x| m.merge(*x));
            m
        })
        .collect();
    let threshold = p.eps0 * p.eps0 * p.delta.powf(1.0 / 3.0);
    let table: Vec<ScoreBin> = bins
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let face = i / per_face;
            let (used, widened) = if m.n >= o.min_per_bin {
                (*m, Widening::None)
            } else if faces[face].n >= o.min_per_bin {
                (faces[face], Widening::Face)
            } else {
                (overall, Widening::All)
            };
            let mut cell = vec![0u32; d - 1];
            let mut c = i % per_face;
            for k in (0..d - 1).rev() {
                cell[k] = (c % b) as u32;
                c /= b;
            }
            let score = Estimate::from_moments(&used);
            ScoreBin {
                face: face as u32,
                cell,
                samples: m.n,
                score,
                widened,
                generic: score.value < threshold,
            }
        })
        .collect();
    let bad = samples.iter().filter(|(i, _)| !table[*i].generic).count();
    Ok(GenericTable {
        start: x.to_vec(d),
        threshold,
        bins_per_side: o.bins_per_side,
        important: targets.len(),
        bins: table,
        overall: Estimate::from_moments(&overall),
        nongeneric_mass: bad as f64 / samples.len() as f64,
    })
}
