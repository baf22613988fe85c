use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use super::ScenarioParams;
use crate::error::{Error, Result};
use crate::exec::{replicas, Executor, Moments};
use crate::rng::{derive_key, replica_rng, tags};
use crate::site::{OpenBox, Site};
use crate::walk::{sigma_times, Estimate, Stepper, TrajectorySummary, WalkConfig};

/// Bound on the hitting time `chi_M` in the `Case2` event: `M d^{3/2}` as
/// written, or `M d^{3/2} L^2` with the diffusive scaling used elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiScaling {
    Literal,
    LSquared,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Target slab hit within time `M L^2 / h` inside the tube.
    AhLM,
    /// Target slab hit before `sigma_K`, `K = floor((M / h)(1 + eps) / eps0^2)`.
    TildeA,
    /// The sigma-skeleton version with the count bound and generic pairs.
    AMeps0delta,
    /// `N` skeleton blocks steered along the rows `j_1..j_N`.
    Chain { columns: Vec<i64> },
    /// The event used when the mass above the cutoff is negligible.
    Case2 { chi: ChiScaling },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::AhLM => "A_hL_M",
            EventKind::TildeA => "TildeA",
            EventKind::AMeps0delta => "A_M_eps0_delta",
            EventKind::Chain { .. } => "Chain",
            EventKind::Case2 { .. } => "Case2",
        }
    }
}

type SitePredicate<'a> = &'a (dyn Fn(&Site) -> bool + Sync);
type PairPredicate<'a> = &'a (dyn Fn(&Site, &Site) -> bool + Sync);

/// Injected environment-dependent tests. A missing `generic` predicate
/// disables the generic-pair clause; a missing `good_point` disables the
/// final `Case2` clause.
#[derive(Clone, Copy, Default)]
pub struct EventContext<'a> {
    pub generic: Option<PairPredicate<'a>>,
    pub important: Option<SitePredicate<'a>>,
    pub good_point: Option<SitePredicate<'a>>,
}

/// The boxes of the scenario events, in absolute coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    d: usize,
    l: f64,
    m: f64,
    s: f64,
    eps0: f64,
}

/// Open interval containing exactly the integer `k`.
fn exactly(k: f64) -> (f64, f64) {
    (k - 0.5, k + 0.5)
}

/// Open interval containing the integers of `[a, b]`.
fn closed(a: f64, b: f64) -> (f64, f64) {
    (a.ceil() - 0.5, b.floor() + 0.5)
}

impl Geometry {
    pub fn new(p: &ScenarioParams) -> Geometry {
        Geometry {
            d: p.d,
            l: p.l,
            m: p.m,
            s: p.m.sqrt() * p.l,
            eps0: p.eps0,
        }
    }

    fn make(&self, first: (f64, f64), second: (f64, f64), rest: (f64, f64)) -> OpenBox {
        let mut b = OpenBox::unbounded(self.d).with_side(0, first.0, first.1);
        if self.d > 1 {
            b = b.with_side(1, second.0, second.1);
        }
        for k in 2..self.d {
            b = b.with_side(k, rest.0, rest.1);
        }
        b
    }

    /// First coordinate of the target plane, `ceil(M L)`.
    pub fn plane(&self) -> f64 {
        (self.m * self.l).ceil()
    }

    pub fn target(&self) -> OpenBox {
        let s = self.s;
        self.make(exactly(self.plane()), (s / 2.0, 1.5 * s), (-s / 2.0, s / 2.0))
    }

    pub fn tube(&self, x0: &Site) -> OpenBox {
        let s = self.s;
        self.make((x0.0[0] as f64 - 2.0 * self.l, f64::INFINITY), (-s, 2.0 * s), (-s, s))
    }

    pub fn skeleton_target(&self) -> OpenBox {
        self.chain_target(0, 1)
    }

    pub fn skeleton_tube(&self) -> OpenBox {
        let s = self.s;
        self.make((-3.0 * self.l, self.m * self.l), (-s, 2.0 * s), (-s, s))
    }

    /// Target of block `i` steered to row `j`.
    pub fn chain_target(&self, i: i64, j: i64) -> OpenBox {
        let (s, ml) = (self.s, self.m * self.l);
        let i = i as f64;
        let j = j as f64;
        self.make(
            ((i + 1.0) * ml - self.eps0 * self.l, (i + 1.0) * ml),
            ((j - 0.5) * s, (j + 0.5) * s),
            (-s / 2.0, s / 2.0),
        )
    }

    pub fn chain_tube(&self, i: i64, j: i64) -> OpenBox {
        let (s, ml) = (self.s, self.m * self.l);
        let i = i as f64;
        let j = j as f64;
        self.make(
            (i * ml - 3.0 * self.l, (i + 1.0) * ml),
            ((j - 2.0) * s, (j + 2.0) * s),
            (-2.0 * s, 2.0 * s),
        )
    }

    pub fn case2_tube(&self) -> OpenBox {
        let s = self.s;
        self.make(closed(-3.0 * self.l, self.m * self.l), (-s, 2.0 * s), (-s, s))
    }

    pub fn case2_final(&self) -> OpenBox {
        let s = self.s;
        self.make(exactly(self.plane()), (s, 3.0 * s), (-s / 2.0, s / 2.0))
    }
}

fn sigma_cap(p: &ScenarioParams) -> f64 {
    (p.m / p.h()) * (1.0 + p.eps) / (p.eps0 * p.eps0)
}

fn count_cap(p: &ScenarioParams) -> f64 {
    (1.0 + p.eps) * p.m * (p.d as f64).sqrt() / (p.eps0 * p.eps0)
}

/// Index `F` of the first sigma-time at or after the first visit to
/// `x_1 >= ceil(M L)`.
pub fn plane_sigma_index(path: &[Site], sig: &[usize], plane: f64) -> Option<usize> {
    let tau = path.iter().position(|x| x.0[0] as f64 >= plane)?;
    sig.iter().position(|&s| s >= tau)
}

fn check_a(path: &[Site], g: &Geometry, cap: f64) -> bool {
    let tube = g.tube(&path[0]);
    let target = g.target();
    for (t, x) in path.iter().enumerate() {
        if !tube.contains(x) {
            return false;
        }
        if target.contains(x) {
            return t as f64 <= cap;
        }
        if t as f64 > cap {
            return false;
        }
    }
    false
}

fn check_tilde(path: &[Site], g: &Geometry, sig: &[usize], k: usize) -> bool {
    let tube = g.tube(&path[0]);
    let target = g.target();
    let sk = sig.get(k).copied().unwrap_or(usize::MAX);
    for (t, x) in path.iter().enumerate() {
        if t >= sk || !tube.contains(x) {
            return false;
        }
        if target.contains(x) {
            return true;
        }
    }
    false
}

/// One skeleton block from index `from`: returns the block length `F`
/// when the clauses hold.
fn check_block(
    skel: &[Site],
    from: usize,
    target: &OpenBox,
    tube: &OpenBox,
    entry: f64,
    cap: f64,
    ctx: &EventContext,
) -> Option<usize> {
    let f = skel[from..].iter().position(|x| x.0[0] as f64 > entry)?;
    let mut hit = false;
    for x in &skel[from..] {
        if !tube.contains(x) {
            return None;
        }
        if target.contains(x) {
            hit = true;
            break;
        }
    }
    if !hit || f as f64 > cap {
        return None;
    }
    if let Some(gen) = ctx.generic {
        // pairs whose second point was not recorded are skipped
        for j in from..=from + f {
            if j + 1 < skel.len() && !gen(&skel[j], &skel[j + 1]) {
                return None;
            }
        }
    }
    Some(f)
}

fn check_case2(path: &[Site], g: &Geometry, p: &ScenarioParams, chi: ChiScaling, ctx: &EventContext) -> Result<bool> {
    let important = ctx
        .important
        .ok_or_else(|| Error::param("important", "the Case2 event needs an important-point predicate"))?;
    let tube = g.case2_tube();
    let first = g.target();
    let mut reached = false;
    for x in path {
        if !tube.contains(x) {
            return Ok(false);
        }
        if first.contains(x) {
            reached = true;
            break;
        }
    }
    if !reached {
        return Ok(false);
    }
    let fin = g.case2_final();
    let Some(t) = path.iter().position(|x| fin.contains(x)) else {
        return Ok(false);
    };
    let d = p.d as f64;
    let bound = match chi {
        ChiScaling::Literal => p.m * d.powf(1.5),
        ChiScaling::LSquared => p.m * d.powf(1.5) * p.l * p.l,
    };
    if t as f64 > bound || path[..=t].iter().any(important) {
        return Ok(false);
    }
    Ok(ctx.good_point.is_none_or(|good| good(&path[t])))
}

/// Evaluates `kind` on a recorded path (first site is `X_0`).
pub fn check_path(path: &[Site], p: &ScenarioParams, kind: &EventKind, ctx: &EventContext) -> Result<bool> {
    if path.is_empty() {
        return Err(Error::param("path", "empty"));
    }
    let g = Geometry::new(p);
    match kind {
        EventKind::AhLM => Ok(check_a(path, &g, p.m * p.l * p.l / p.h())),
        EventKind::TildeA => {
            let sig = sigma_times(path, p.eps0, p.l)?;
            Ok(check_tilde(path, &g, &sig, sigma_cap(p).floor() as usize))
        }
        EventKind::AMeps0delta => {
            let sig = sigma_times(path, p.eps0, p.l)?;
            let skel: Vec<Site> = sig.iter().map(|&i| path[i]).collect();
            let entry = (p.m - p.eps0) * p.l;
            Ok(check_block(
                &skel,
                0,
                &g.skeleton_target(),
                &g.skeleton_tube(),
                entry,
                count_cap(p),
                ctx,
            )
            .is_some())
        }
        EventKind::Chain { columns } => {
            let sig = sigma_times(path, p.eps0, p.l)?;
            let skel: Vec<Site> = sig.iter().map(|&i| path[i]).collect();
            let mut from = 0;
            for (i, &j) in columns.iter().enumerate() {
                let i = i as i64;
                // block boundaries are closed on the left
                let entry = (i + 1) as f64 * p.m * p.l - p.eps0 * p.l;
                let entry = entry.ceil() - 0.5;
                match check_block(
                    &skel,
                    from,
                    &g.chain_target(i, j),
                    &g.chain_tube(i, j),
                    entry,
                    count_cap(p),
                    ctx,
                ) {
                    Some(f) => from += f,
                    None => return Ok(false),
                }
            }
            Ok(true)
        }
        EventKind::Case2 { chi } => check_case2(path, &g, p, *chi, ctx),
    }
}

/// Evaluates `kind` on a trajectory recorded with its path.
pub fn check_event(traj: &TrajectorySummary, p: &ScenarioParams, kind: &EventKind, ctx: &EventContext) -> Result<bool> {
    let path = traj
        .path
        .as_deref()
        .ok_or_else(|| Error::param("trajectory", "recorded without its path"))?;
    check_path(path, p, kind, ctx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRates {
    pub kinds: Vec<&'static str>,
    /// Importance-weighted probability of each event.
    pub estimates: Vec<Estimate>,
    pub replicas: u64,
    /// Runs stopped by the step cap before the events were decided.
    pub censored: u64,
}

/// Union of the tubes the kinds use, widened by `eps0 L + 1` so that a
/// walk outside it has a sigma-point outside every tube.
fn outer_box(p: &ScenarioParams, g: &Geometry, kinds: &[EventKind], x0: &Site) -> OpenBox {
    let mut boxes = Vec::new();
    for k in kinds {
        match k {
            EventKind::AhLM | EventKind::TildeA => boxes.push(g.tube(x0)),
            EventKind::AMeps0delta => boxes.push(g.skeleton_tube()),
            EventKind::Case2 { .. } => boxes.push(g.case2_tube()),
            EventKind::Chain { columns } => {
                for (i, &j) in columns.iter().enumerate() {
                    boxes.push(g.chain_tube(i as i64, j));
                }
            }
        }
    }
    let pad = p.eps0 * p.l + 1.0;
    let mut u = boxes[0];
    for b in &boxes[1..] {
        for k in 0..p.d {
            u.lo[k] = u.lo[k].min(b.lo[k]);
            u.hi[k] = u.hi[k].max(b.hi[k]);
        }
    }
    for k in 0..p.d {
        u.lo[k] -= pad;
        u.hi[k] += pad;
    }
    u
}

/// Samples walks from `start` under the (possibly tilted) law of `cfg` and
/// estimates the probability of each event under the simple random walk,
/// reweighting by `exp(steps ln m - theta dx_1)` at the stopping time.
/// All kinds are evaluated on the same runs.
///
/// A run stops when it leaves the widened union of the tubes, at the step
/// cap, or, when only `AhLM` and `TildeA` are requested, as soon as both
/// are decided.
#[allow(clippy::too_many_arguments)]
pub fn sample_events<X: Executor + ?Sized>(
    kinds: &[EventKind],
    p: &ScenarioParams,
    start: Site,
    cfg: &WalkConfig,
    reps: u64,
    seed: u64,
    ctx: &EventContext,
    exec: &X,
) -> Result<EventRates> {
    if kinds.is_empty() {
        return Err(Error::param("kinds", "empty"));
    }
    if cfg.dim != p.d {
        return Err(Error::param("d", "walk and scenario dimensions differ"));
    }
    let radius = p.sigma_radius();
    if !(radius >= 1.0) {
        return Err(Error::param("eps0*L", alloc::format!("{radius} < 1")));
    }
    let g = Geometry::new(p);
    let outer = outer_box(p, &g, kinds, &start);
    let fast = kinds.iter().all(|k| matches!(k, EventKind::AhLM | EventKind::TildeA));
    let tube = g.tube(&start);
    let target = g.target();
    let time_cap = p.m * p.l * p.l / p.h();
    let k_cap = if kinds.contains(&EventKind::TildeA) {
        sigma_cap(p).floor() as usize
    } else {
        0
    };
    let r2 = radius * radius;
    let key = derive_key(seed, &[tags::EVENTS]);
    let lm = cfg.log_mgf();
    let runs = replicas(exec, reps, |rep| -> Result<(Vec<f64>, bool)> {
        let mut rng = replica_rng(key, rep);
        let mut stepper = Stepper::new(cfg);
        let mut x = start;
        let mut path = vec![start];
        let mut anchor = start;
        let mut sigmas = 0usize;
        let mut censored = false;
        loop {
            if !outer.contains(&x) {
                break;
            }
            if fast {
                let steps = path.len() - 1;
                if !tube.contains(&x) || target.contains(&x) || (steps as f64 > time_cap && sigmas >= k_cap) {
                    break;
                }
            }
            if path.len() as u64 > cfg.step_cap {
                censored = true;
                break;
            }
            Stepper::apply(&mut x, stepper.draw(&mut rng));
            path.push(x);
            if x.dist_sq(&anchor) as f64 >= r2 {
                anchor = x;
                sigmas += 1;
            }
        }
        let steps = (path.len() - 1) as f64;
        let w = (steps * lm - cfg.tilt * (x.0[0] - start.0[0]) as f64).exp();
        let mut out = Vec::with_capacity(kinds.len());
        for k in kinds {
            out.push(if check_path(&path, p, k, ctx)? { w } else { 0.0 });
        }
        Ok((out, censored))
    });
    let mut moments = vec![Moments::default(); kinds.len()];
    let mut censored = 0;
    for r in runs {
        let (vals, c) = r?;
        censored += c as u64;
        for (m, v) in moments.iter_mut().zip(vals) {
            m.push(v);
        }
    }
    Ok(EventRates {
        kinds: kinds.iter().map(|k| k.name()).collect(),
        estimates: moments.iter().map(Estimate::from_moments).collect(),
        replicas: reps,
        censored,
    })
}
