//! Simple random walk engine: plain and tilted stepping, stopping at the
//! hyperplane `x_1 >= n`, local times and sigma-times.
//!
//! The drift direction is always the first coordinate axis.

pub mod green;
pub mod hitting;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand_core::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{unit_f64, Digits};
use crate::site::{check_dim, OpenBox, Site};

pub use green::{return_probability, LatticeConstants, ReturnMethod};
pub use hitting::{hit_before_exit, sum_hit_probabilities, visit_histogram, Estimate, VisitHistogram, VisitSampling};

/// `ln m(theta)` with `m(theta) = (cosh theta + d - 1) / d`.
pub fn log_mgf(theta: f64, d: usize) -> f64 {
    let s = (0.5 * theta).sinh();
    (2.0 * s * s / d as f64).ln_1p()
}

/// Mean displacement per step along `e_1` under tilt `theta`.
pub fn drift(theta: f64, d: usize) -> f64 {
    theta.sinh() / (theta.cosh() + d as f64 - 1.0)
}

/// Inverse of [`drift`] for `|v| < 1`:
/// `theta = atanh v + asinh(v (d - 1) / sqrt(1 - v^2))`.
pub fn tilt_for_drift(d: usize, v: f64) -> Result<f64> {
    check_dim(d)?;
    if !(v.abs() < 1.0) {
        return Err(Error::param("drift", "must lie in (-1, 1)"));
    }
    Ok(v.atanh() + (v * (d as f64 - 1.0) / (1.0 - v * v).sqrt()).asinh())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkConfig {
    pub dim: usize,
    /// Exponential tilt along the first axis.
    pub tilt: f64,
    pub step_cap: u64,
}

impl WalkConfig {
    pub fn new(dim: usize, tilt: f64, step_cap: u64) -> Result<WalkConfig> {
        check_dim(dim)?;
        if !tilt.is_finite() {
            return Err(Error::param("tilt", "must be finite"));
        }
        if step_cap == 0 {
            return Err(Error::param("step_cap", "must be positive"));
        }
        Ok(WalkConfig { dim, tilt, step_cap })
    }

    /// Default cap `10^4 n^2 d` for a run to the plane at level `n`.
    pub fn default_step_cap(n: i64, dim: usize) -> u64 {
        let n = n.max(1) as u64;
        10_000u64.saturating_mul(n * n).saturating_mul(dim as u64)
    }

    pub fn log_mgf(&self) -> f64 {
        log_mgf(self.tilt, self.dim)
    }
}

/// Draws unit steps. Direction `0` is `+e_1`, `1` is `-e_1`, and
/// `2k, 2k + 1` are `+e_{k+1}, -e_{k+1}` for `k >= 1`.
#[derive(Clone, Debug)]
pub struct Stepper {
    dim: usize,
    tilted: bool,
    p_plus: f64,
    p_axis: f64,
    digits: Digits,
}

impl Stepper {
    pub fn new(cfg: &WalkConfig) -> Stepper {
        let d = cfg.dim as f64;
        let z = cfg.tilt.cosh() + d - 1.0;
        Stepper {
            dim: cfg.dim,
            tilted: cfg.tilt != 0.0,
            p_plus: 0.5 * cfg.tilt.exp() / z,
            p_axis: cfg.tilt.cosh() / z,
            digits: Digits::new(2 * cfg.dim as u64),
        }
    }

    /// Direction index of the next step.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> usize {
        if !self.tilted {
            return self.digits.next(rng);
        }
        let u = unit_f64(rng);
        if u < self.p_plus {
            0
        } else if u < self.p_axis || self.dim == 1 {
            1
        } else {
            let lateral = 2 * (self.dim - 1);
            let k = ((u - self.p_axis) / (1.0 - self.p_axis) * lateral as f64) as usize;
            2 + k.min(lateral - 1)
        }
    }

    #[inline]
    pub fn apply(x: &mut Site, dir: usize) {
        let axis = dir >> 1;
        if dir & 1 == 0 {
            x.0[axis] += 1;
        } else {
            x.0[axis] -= 1;
        }
    }

    /// Probability of direction `dir` under this stepper.
    pub fn prob(&self, dir: usize) -> f64 {
        if !self.tilted {
            return 1.0 / (2 * self.dim) as f64;
        }
        match dir {
            0 => self.p_plus,
            1 => self.p_axis - self.p_plus,
            _ => (1.0 - self.p_axis) / (2 * (self.dim - 1)) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitFlag {
    /// Reached the plane.
    None,
    /// Left the stop geometry before reaching the plane.
    Tube,
    /// Hit the step cap before reaching the plane.
    StepCap,
}

#[derive(Clone, Debug, Default)]
pub struct RecordOptions {
    pub local_times: bool,
    pub path: bool,
    /// Radius `eps0 * L` for on-line sigma-times.
    pub sigma_radius: Option<f64>,
}

/// Outcome of one run. Local times count the site occupied at each time
/// `0..steps`, so they sum to `steps`; the stopping site is not charged.
#[derive(Clone, Debug)]
pub struct TrajectorySummary {
    pub endpoint: Site,
    pub steps: u64,
    pub plane: i64,
    pub hit_plane: bool,
    pub exit: ExitFlag,
    /// `steps * ln m(theta) - theta * (x_1(end) - x_1(0))`.
    pub log_weight: f64,
    pub local_times: Option<BTreeMap<Site, u32>>,
    pub sigma_indices: Vec<u64>,
    pub path: Option<Vec<Site>>,
}

/// Walks from the origin until `x_1 >= n`, the tube is left, or the step
/// cap is reached.
pub fn run_to_hyperplane<R: RngCore + ?Sized>(
    cfg: &WalkConfig,
    n: i64,
    rng: &mut R,
    tube: Option<&OpenBox>,
    rec: &RecordOptions,
) -> Result<TrajectorySummary> {
    run_from(cfg, Site::ORIGIN, n, rng, tube, rec)
}

/// As [`run_to_hyperplane`] from an arbitrary start.
pub fn run_from<R: RngCore + ?Sized>(
    cfg: &WalkConfig,
    start: Site,
    n: i64,
    rng: &mut R,
    tube: Option<&OpenBox>,
    rec: &RecordOptions,
) -> Result<TrajectorySummary> {
    if let Some(r) = rec.sigma_radius {
        if !(r >= 1.0) {
            return Err(Error::param("eps0*L", format!("{r} < 1")));
        }
    }
    let mut stepper = Stepper::new(cfg);
    let mut x = start;
    let mut steps = 0u64;
    let mut local: Option<BTreeMap<Site, u32>> = rec.local_times.then(BTreeMap::new);
    let mut path: Option<Vec<Site>> = rec.path.then(|| alloc::vec![start]);
    let mut sigma = Vec::new();
    let mut anchor = start;
    let r2 = rec.sigma_radius.map(|r| r * r);
    let exit = loop {
        if x.0[0] as i64 >= n {
            break ExitFlag::None;
        }
        if let Some(t) = tube {
            if !t.contains(&x) {
                break ExitFlag::Tube;
            }
        }
        if steps >= cfg.step_cap {
            break ExitFlag::StepCap;
        }
        if let Some(m) = local.as_mut() {
            *m.entry(x).or_insert(0) += 1;
        }
        Stepper::apply(&mut x, stepper.draw(rng));
        steps += 1;
        if let Some(p) = path.as_mut() {
            p.push(x);
        }
        if let Some(r2) = r2 {
            if x.dist_sq(&anchor) as f64 >= r2 {
                sigma.push(steps);
                anchor = x;
            }
        }
    };
    let dx = (x.0[0] - start.0[0]) as f64;
    Ok(TrajectorySummary {
        endpoint: x,
        steps,
        plane: n,
        hit_plane: exit == ExitFlag::None,
        exit,
        log_weight: steps as f64 * cfg.log_mgf() - cfg.tilt * dx,
        local_times: local,
        sigma_indices: sigma,
        path,
    })
}

/// Sigma-times of a recorded path: `sigma_0 = 0` and `sigma_i` is the
/// first index after `sigma_{i-1}` at Euclidean distance at least `eps0 * L`
/// from the point at `sigma_{i-1}`.
pub fn sigma_times(path: &[Site], eps0: f64, l: f64) -> Result<Vec<usize>> {
    let r = eps0 * l;
    if !(r >= 1.0) {
        return Err(Error::param("eps0*L", format!("{r} < 1")));
    }
    let r2 = r * r;
    let mut out = alloc::vec![0usize];
    if path.is_empty() {
        return Ok(out);
    }
    let mut anchor = path[0];
    for (i, x) in path.iter().enumerate().skip(1) {
        if x.dist_sq(&anchor) as f64 >= r2 {
            out.push(i);
            anchor = *x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_inverts() {
        for d in 1..=5 {
            for v in [-0.9, -0.3, 0.0, 0.01, 0.2, 0.75] {
                let t = tilt_for_drift(d, v).unwrap();
                assert!((drift(t, d) - v).abs() < 1e-14, "d={d} v={v}");
            }
        }
        assert!(tilt_for_drift(3, 1.0).is_err());
    }
    use crate::rng::replica_rng;

    fn cfg(d: usize, theta: f64) -> WalkConfig {
        WalkConfig::new(d, theta, 1_000_000).unwrap()
    }

    #[test]
    fn log_mgf_matches_definition() {
        for (t, d) in [(0.3f64, 3usize), (1.7, 1), (0.0, 5), (2.5, 8)] {
            let m = (t.cosh() + d as f64 - 1.0) / d as f64;
            assert!((log_mgf(t, d) - m.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn step_probabilities_are_tilted() {
        let st = Stepper::new(&cfg(3, 0.8));
        let total: f64 = (0..6).map(|k| st.prob(k)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let m = (0.8f64.cosh() + 2.0) / 3.0;
        assert!((st.prob(0) - 0.8f64.exp() / (6.0 * m)).abs() < 1e-15);
        assert!((st.prob(1) - (-0.8f64).exp() / (6.0 * m)).abs() < 1e-15);
        assert!((st.prob(4) - 1.0 / (6.0 * m)).abs() < 1e-15);
    }

    #[test]
    fn untilted_walk_hits_level_one() {
        let c = cfg(3, 0.0);
        let mut hit = 0;
        for r in 0..2000 {
            let mut rng = replica_rng(3, r);
            let t = run_to_hyperplane(&c, 1, &mut rng, None, &RecordOptions::default()).unwrap();
            hit += t.hit_plane as u32;
            assert_eq!(t.log_weight, 0.0);
        }
        assert!(hit >= 1990, "{hit}");
    }

    #[test]
    fn level_zero_is_immediate() {
        let mut rng = replica_rng(1, 0);
        let rec = RecordOptions {
            local_times: true,
            ..Default::default()
        };
        let t = run_to_hyperplane(&cfg(2, 0.5), 0, &mut rng, None, &rec).unwrap();
        assert_eq!(t.steps, 0);
        assert!(t.local_times.unwrap().is_empty());
        assert_eq!(t.log_weight, 0.0);
    }

    #[test]
    fn local_times_sum_to_steps() {
        let rec = RecordOptions {
            local_times: true,
            path: true,
            sigma_radius: Some(2.0),
        };
        for r in 0..50 {
            let mut rng = replica_rng(8, r);
            let t = run_to_hyperplane(&cfg(2, 0.3), 6, &mut rng, None, &rec).unwrap();
            let sum: u64 = t.local_times.as_ref().unwrap().values().map(|&v| v as u64).sum();
            assert_eq!(sum, t.steps);
            let path = t.path.as_ref().unwrap();
            assert_eq!(path.len() as u64, t.steps + 1);
            let offline = sigma_times(path, 1.0, 2.0).unwrap();
            assert_eq!(
                &offline[1..],
                &t.sigma_indices.iter().map(|&s| s as usize).collect::<Vec<_>>()[..]
            );
        }
    }

    #[test]
    fn step_cap_is_flagged() {
        let c = WalkConfig::new(3, 0.0, 5).unwrap();
        let mut rng = replica_rng(1, 0);
        let t = run_to_hyperplane(&c, 100, &mut rng, None, &RecordOptions::default()).unwrap();
        assert_eq!(t.exit, ExitFlag::StepCap);
        assert!(!t.hit_plane);
        assert_eq!(t.steps, 5);
    }

    #[test]
    fn tube_exit_is_flagged() {
        let c = cfg(2, 0.0);
        let tube = OpenBox::unbounded(2).with_side(1, -2.0, 2.0);
        let mut flagged = 0;
        for r in 0..200 {
            let mut rng = replica_rng(2, r);
            let t = run_to_hyperplane(&c, 30, &mut rng, Some(&tube), &RecordOptions::default()).unwrap();
            if t.exit == ExitFlag::Tube {
                flagged += 1;
                assert_eq!(t.endpoint.0[1].abs(), 2);
            }
        }
        assert!(flagged > 150);
    }

    #[test]
    fn sigma_examples() {
        let line: Vec<Site> = (0..=20).map(|i| Site::new(&[i, 0, 0])).collect();
        assert_eq!(sigma_times(&line, 1.0, 5.0).unwrap(), [0, 5, 10, 15, 20]);
        let mut rng = replica_rng(4, 0);
        let c = cfg(3, 0.0);
        let rec = RecordOptions {
            path: true,
            ..Default::default()
        };
        let t = run_to_hyperplane(&WalkConfig { step_cap: 300, ..c }, 1000, &mut rng, None, &rec).unwrap();
        let p = t.path.unwrap();
        let s = sigma_times(&p, 1.0, 1.0).unwrap();
        assert_eq!(s, (0..p.len()).collect::<Vec<_>>());
        assert!(sigma_times(&p, 0.1, 5.0).is_err());
    }

    #[test]
    fn sigma_one_scales_like_radius_squared() {
        let c = WalkConfig::new(3, 0.0, u64::MAX).unwrap();
        let mut total = 0u64;
        let n = 400;
        for r in 0..n {
            let mut rng = replica_rng(77, r);
            let mut st = Stepper::new(&c);
            let mut x = Site::ORIGIN;
            let mut k = 0u64;
            while (x.norm_sq() as f64) < 2500.0 {
                Stepper::apply(&mut x, st.draw(&mut rng));
                k += 1;
            }
            total += k;
        }
        let ratio = total as f64 / n as f64 / 2500.0;
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn sigma_displacements_are_bounded() {
        let rec = RecordOptions {
            path: true,
            sigma_radius: Some(3.5),
            ..Default::default()
        };
        let mut rng = replica_rng(5, 5);
        let t = run_to_hyperplane(&cfg(3, 0.2), 40, &mut rng, None, &rec).unwrap();
        let p = t.path.unwrap();
        let mut prev = p[0];
        for &s in &t.sigma_indices {
            let d = (p[s as usize].dist_sq(&prev) as f64).sqrt();
            assert!((3.5..=4.5).contains(&d), "{d}");
            prev = p[s as usize];
        }
    }

    #[test]
    fn tilted_path_probabilities_are_exact_in_d1() {
        // every path of 4 steps: tilted probability = untilted * e^{theta dx} / m^4
        let theta = 0.7;
        let c = cfg(1, theta);
        let st = Stepper::new(&c);
        let m = theta.cosh();
        for mask in 0u32..16 {
            let mut p = 1.0;
            let mut dx = 0i32;
            for k in 0..4 {
                let dir = ((mask >> k) & 1) as usize;
                p *= st.prob(dir);
                dx += if dir == 0 { 1 } else { -1 };
            }
            let expect = 0.5f64.powi(4) * (theta * dx as f64).exp() / m.powi(4);
            assert!((p - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn reweighting_is_unbiased_for_a_cylinder_event() {
        // event: first three steps are +e1, -e2, +e1 in d = 2
        let target = [0usize, 3, 0];
        let n_rep = 100_000u64;
        let theta = 0.6;
        let est = |cfg: &WalkConfig, key: u64| {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for r in 0..n_rep {
                let mut rng = replica_rng(key, r);
                let mut st = Stepper::new(cfg);
                let mut x = Site::ORIGIN;
                let mut ok = true;
                for &want in &target {
                    let dir = st.draw(&mut rng);
                    Stepper::apply(&mut x, dir);
                    ok &= dir == want;
                }
                let w = if ok {
                    (3.0 * cfg.log_mgf() - cfg.tilt * x.0[0] as f64).exp()
                } else {
                    0.0
                };
                s += w;
                s2 += w * w;
            }
            let m = s / n_rep as f64;
            (m, ((s2 / n_rep as f64 - m * m) / n_rep as f64).sqrt())
        };
        let (a, sa) = est(&cfg(2, theta), 1);
        let (b, sb) = est(&cfg(2, 0.0), 2);
        assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a} {b}");
        assert!((a - 0.25f64.powi(3)).abs() < 3.0 * sa);
    }
}
