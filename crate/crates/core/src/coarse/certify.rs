use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use super::partition::{partition, IntervalPartition};
use super::ScenarioParams;
use crate::asymptotics::Regime;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::field::{Environment, DEFAULT_VOLUME_CAP};
use crate::potential::PotentialDistribution;
use crate::site::{Site, SiteBox, MAX_DIM};

/// Which goodness test applies: per-interval counts when the mass above
/// the cutoff matters, a plain important-point count otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Case1,
    Case2,
}

impl Mode {
    pub fn for_regime(r: Regime) -> Mode {
        match r {
            Regime::MassAboveCutoff => Mode::Case1,
            Regime::MassBelowCutoff => Mode::Case2,
        }
    }
}

/// Inputs of the box test. `delta` and `k_prime` enter only the `Case2`
/// threshold `2 L^{d-2} delta^d K' eps^4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodnessParams {
    pub eps: f64,
    pub lambda: f64,
    pub l: f64,
    pub delta1: f64,
    pub delta: f64,
    pub k_prime: f64,
    pub mode: Mode,
    pub volume_cap: u64,
}

impl GoodnessParams {
    pub fn new(eps: f64, lambda: f64, l: f64, delta1: f64, mode: Mode) -> Result<GoodnessParams> {
        let g = GoodnessParams {
            eps,
            lambda,
            l,
            delta1,
            delta: 0.01,
            k_prime: 1.0,
            mode,
            volume_cap: DEFAULT_VOLUME_CAP,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_scenario(p: &ScenarioParams, mode: Mode) -> Result<GoodnessParams> {
        GoodnessParams {
            delta: p.delta,
            ..GoodnessParams::new(p.eps, p.lambda, p.l, p.delta1, mode)?
        }
        .checked()
    }

    pub fn checked(self) -> Result<GoodnessParams> {
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param("eps", "must lie in (0, 1)"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "must be finite and positive"));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::param("L", "must be finite and positive"));
        }
        if !(self.delta1 > 0.0 && self.delta > 0.0 && self.k_prime > 0.0) {
            return Err(Error::param("delta1", "delta1, delta and K' must be positive"));
        }
        let side = self.side();
        if !(side >= 1.0) {
            return Err(Error::param(
                "delta1*L",
                alloc::format!("mesoscopic side {side} is below lattice resolution"),
            ));
        }
        Ok(())
    }

    /// Side `delta1 * L` of a mesoscopic box.
    pub fn side(&self) -> f64 {
        self.delta1 * self.l
    }

    pub fn case2_threshold(&self, d: usize) -> f64 {
        2.0 * self.l.powi(d as i32 - 2) * self.delta.powi(d as i32) * self.k_prime * self.eps.powi(4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BoxVerdict {
    Good,
    BadRelevant { interval: usize },
    BadIrrelevant { interval: usize },
    BadCase2 { count: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxEntry {
    pub index: Vec<i64>,
    pub verdict: BoxVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub region_lo: Vec<i64>,
    pub region_hi: Vec<i64>,
    pub delta1: f64,
    pub side: f64,
    pub mode: Mode,
    pub overall: bool,
    pub boxes: Vec<BoxEntry>,
}

/// Box index ranges and the lattice extent of each box along each axis.
struct Grid {
    d: usize,
    side: f64,
    first: [i64; MAX_DIM],
    counts: [u64; MAX_DIM],
}

/// First integer `x` with `floor(x / side) >= n`.
fn box_start(n: i64, side: f64) -> i64 {
    let mut x = (side * n as f64).ceil() as i64;
    while ((x - 1) as f64 / side).floor() as i64 >= n {
        x -= 1;
    }
    while (((x as f64) / side).floor() as i64) < n {
        x += 1;
    }
    x
}

impl Grid {
    fn new(region: &SiteBox, side: f64, cap: u64) -> Result<Grid> {
        let d = region.dim;
        if region.is_empty() {
            return Err(Error::param("region", "empty"));
        }
        let mut first = [0i64; MAX_DIM];
        let mut counts = [1u64; MAX_DIM];
        let mut volume = 1u64;
        for k in 0..d {
            let a = (region.lo.0[k] as f64 / side).floor() as i64;
            let b = (region.hi.0[k] as f64 / side).floor() as i64;
            first[k] = a;
            counts[k] = (b - a + 1) as u64;
            let len = (box_start(b + 1, side) - box_start(a, side)) as u64;
            volume = volume.saturating_mul(len);
        }
        if volume > cap {
            return Err(Error::ResourceCap {
                what: "certified volume",
                requested: volume,
                cap,
            });
        }
        Ok(Grid { d, side, first, counts })
    }

    fn len(&self) -> usize {
        self.counts[..self.d].iter().product::<u64>() as usize
    }

    fn index(&self, mut flat: usize) -> [i64; MAX_DIM] {
        let mut idx = [0i64; MAX_DIM];
        for k in (0..self.d).rev() {
            let c = self.counts[k] as usize;
            idx[k] = self.first[k] + (flat % c) as i64;
            flat /= c;
        }
        idx
    }

    fn sites(&self, idx: &[i64; MAX_DIM]) -> SiteBox {
        let mut lo = [0i32; MAX_DIM];
        let mut hi = [0i32; MAX_DIM];
        for k in 0..self.d {
            lo[k] = box_start(idx[k], self.side) as i32;
            hi[k] = box_start(idx[k] + 1, self.side) as i32 - 1;
        }
        SiteBox {
            dim: self.d,
            lo: Site(lo),
            hi: Site(hi),
        }
    }
}

struct Tester<'a> {
    p: &'a GoodnessParams,
    parts: IntervalPartition,
    rel_bound: Vec<f64>,
    irr_bound: f64,
    case2_bound: f64,
}

impl<'a> Tester<'a> {
    fn new(p: &'a GoodnessParams, mu: &PotentialDistribution, d: usize) -> Result<Tester<'a>> {
        let parts = partition(p.eps, p.lambda)?.classify(mu, p.l)?;
        let vol = p.side().powi(d as i32);
        let rel_bound = parts.mass.iter().map(|&m| (1.0 + p.eps) * vol * m).collect();
        let irr_bound = 2.0 * vol * parts.relevance_bar(p.l);
        Ok(Tester {
            p,
            parts,
            rel_bound,
            irr_bound,
            case2_bound: p.case2_threshold(d),
        })
    }

    fn verdict<E: Environment + ?Sized>(&self, env: &E, bx: &SiteBox, counts: &mut [u64]) -> BoxVerdict {
        match self.p.mode {
            Mode::Case1 => {
                counts.iter_mut().for_each(|c| *c = 0);
                for x in bx.iter() {
                    if let Some(j) = self.parts.index_of(env.value(&x)) {
                        counts[j] += 1;
                    }
                }
                for (j, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    if self.parts.relevant[j] {
                        if c as f64 > self.rel_bound[j] {
                            return BoxVerdict::BadRelevant { interval: j };
                        }
                    } else if c as f64 > self.irr_bound {
                        return BoxVerdict::BadIrrelevant { interval: j };
                    }
                }
                BoxVerdict::Good
            }
            Mode::Case2 => {
                let threshold = self.p.eps / self.p.lambda;
                let count = bx.iter().filter(|x| env.value(x) >= threshold).count() as u64;
                if count as f64 <= self.case2_bound {
                    BoxVerdict::Good
                } else {
                    BoxVerdict::BadCase2 { count }
                }
            }
        }
    }
}

fn check_dims<E: Environment + ?Sized>(env: &E, region: &SiteBox) -> Result<()> {
    if env.dim() != region.dim {
        return Err(Error::param("region", "dimension differs from the environment"));
    }
    Ok(())
}

/// Verdict for every mesoscopic box `[s n, s (n + 1))`, `s = delta1 L`,
/// that meets `region`. Sites are binned by `floor(x / s)`.
pub fn certify_region<E: Environment + ?Sized, X: Executor + ?Sized>(
    env: &E,
    mu: &PotentialDistribution,
    region: &SiteBox,
    p: &GoodnessParams,
    exec: &X,
) -> Result<GoodnessReport> {
    p.validate()?;
    check_dims(env, region)?;
    let d = region.dim;
    let grid = Grid::new(region, p.side(), p.volume_cap)?;
    let tester = Tester::new(p, mu, d)?;
    let nparts = tester.parts.len();
    let boxes = exec.map(grid.len(), |i| {
        let idx = grid.index(i);
        let mut counts = vec![0u64; nparts];
        let verdict = tester.verdict(env, &grid.sites(&idx), &mut counts);
        BoxEntry {
            index: idx[..d].to_vec(),
            verdict,
        }
    });
    Ok(GoodnessReport {
        region_lo: region.lo.to_vec(d),
        region_hi: region.hi.to_vec(d),
        delta1: p.delta1,
        side: p.side(),
        mode: p.mode,
        overall: boxes.iter().all(|b| b.verdict == BoxVerdict::Good),
        boxes,
    })
}

/// Overall verdict only, stopping at the first bad box.
pub fn region_is_good<E: Environment + ?Sized>(
    env: &E,
    mu: &PotentialDistribution,
    region: &SiteBox,
    p: &GoodnessParams,
) -> Result<bool> {
    p.validate()?;
    check_dims(env, region)?;
    let grid = Grid::new(region, p.side(), p.volume_cap)?;
    let tester = Tester::new(p, mu, region.dim)?;
    let mut counts = vec![0u64; tester.parts.len()];
    Ok((0..grid.len()).all(|i| tester.verdict(env, &grid.sites(&grid.index(i)), &mut counts) == BoxVerdict::Good))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::field::{EnvironmentField, PlantedEnvironment};

    fn params(mode: Mode) -> GoodnessParams {
        GoodnessParams::new(0.2, 0.1, 12.0, 0.25, mode).unwrap()
    }

    #[test]
    fn box_starts_follow_floor() {
        for side in [1.0, 1.5, 2.7, 3.0, 0.25 * 12.0] {
            for n in -20i64..20 {
                let a = box_start(n, side);
                assert!((((a - 1) as f64 / side).floor() as i64) < n);
                assert!((a as f64 / side).floor() as i64 >= n);
            }
        }
    }

    #[test]
    fn boxes_tile_the_region() {
        let region = SiteBox::centered(2, 7).unwrap();
        let grid = Grid::new(&region, 3.0, u64::MAX).unwrap();
        let mut seen = 0u64;
        for i in 0..grid.len() {
            let bx = grid.sites(&grid.index(i));
            seen += bx.iter().filter(|x| region.contains(x)).count() as u64;
        }
        assert_eq!(seen, region.volume());
    }

    #[test]
    fn zero_potential_is_good() {
        let env = EnvironmentField::new(1, PotentialDistribution::point_mass(0.0).unwrap(), 3).unwrap();
        let mu = env.law().clone();
        for mode in [Mode::Case1, Mode::Case2] {
            let r = certify_region(
                &env,
                &mu,
                &SiteBox::centered(3, 10).unwrap(),
                &params(mode),
                &Sequential,
            )
            .unwrap();
            assert!(r.overall);
            assert!(!r.boxes.is_empty());
        }
    }

    #[test]
    fn stuffed_box_is_flagged() {
        let mu = PotentialDistribution::point_mass(0.0).unwrap();
        let mut env = PlantedEnvironment::new(EnvironmentField::new(1, mu.clone(), 3).unwrap());
        for x in SiteBox::new(3, &[3, 3, 3], &[5, 5, 5]).unwrap().iter() {
            env.plant(x, 100.0);
        }
        let region = SiteBox::centered(3, 10).unwrap();
        for mode in [Mode::Case1, Mode::Case2] {
            let r = certify_region(&env, &mu, &region, &params(mode), &Sequential).unwrap();
            assert!(!r.overall);
            let bad: Vec<_> = r.boxes.iter().filter(|b| b.verdict != BoxVerdict::Good).collect();
            assert_eq!(bad.len(), 1);
            assert_eq!(bad[0].index, [1, 1, 1]);
            assert!(!region_is_good(&env, &mu, &region, &params(mode)).unwrap());
        }
    }

    #[test]
    fn sub_lattice_boxes_are_rejected() {
        let r = GoodnessParams::new(0.2, 0.1, 3.0, 0.25, Mode::Case1);
        assert!(matches!(r, Err(Error::InvalidParameter { name: "delta1*L", .. })));
    }

    #[test]
    fn volume_cap_applies() {
        let env = EnvironmentField::new(1, PotentialDistribution::point_mass(0.0).unwrap(), 3).unwrap();
        let p = GoodnessParams {
            volume_cap: 1000,
            ..params(Mode::Case1)
        };
        let r = certify_region(&env, env.law(), &SiteBox::centered(3, 10).unwrap(), &p, &Sequential);
        assert!(matches!(r, Err(Error::ResourceCap { .. })));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn planting_never_repairs(seed in 0u64..1000, plants in proptest::collection::vec((-6i32..=6, -6i32..=6, 0.0f64..50.0), 1..20), case2 in proptest::bool::ANY) {
            let mu = PotentialDistribution::pareto(0.7, 1.0).unwrap();
            let base = EnvironmentField::new(seed, mu.clone(), 2).unwrap();
            let region = SiteBox::centered(2, 6).unwrap();
            let mode = if case2 { Mode::Case2 } else { Mode::Case1 };
            let p = GoodnessParams { delta: 0.3, k_prime: 30.0, ..GoodnessParams::new(0.5, 0.2, 12.0, 0.25, mode).unwrap() };
            let before = certify_region(&base, &mu, &region, &p, &Sequential).unwrap();
            let mut env = PlantedEnvironment::new(&base);
            let threshold = p.eps / p.lambda;
            for (a, b, v) in plants {
                let x = Site::new(&[a, b]);
                // turn unimportant sites into important ones, so counts only grow
                if base.value(&x) < threshold {
                    env.plant(x, threshold + v);
                }
            }
            let after = certify_region(&env, &mu, &region, &p, &Sequential).unwrap();
            for (b, a) in before.boxes.iter().zip(&after.boxes) {
                if b.verdict != BoxVerdict::Good {
                    proptest::prop_assert!(a.verdict != BoxVerdict::Good);
                }
            }
            proptest::prop_assert!(before.overall || !after.overall);
        }
    }
}
