//! Random environments on `Z^d`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::potential::PotentialDistribution;
use crate::rng::site_uniform;
use crate::site::{check_dim, Site, SiteBox};

/// Default cap on the number of sites a box scan may touch.
pub const DEFAULT_VOLUME_CAP: u64 = 100_000_000;

/// Anything that assigns a potential to each site.
pub trait Environment: Sync {
    fn dim(&self) -> usize;
    fn value(&self, site: &Site) -> f64;
}

impl<E: Environment + ?Sized> Environment for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, site: &Site) -> f64 {
        (**self).value(site)
    }
}

/// I.i.d. field: the value at `x` is `mu.sample(u(seed, x))` with `u` a
/// counter-based hash, so it never depends on the order of queries.
#[derive(Clone, Debug)]
pub struct EnvironmentField {
    seed: u64,
    mu: PotentialDistribution,
    dim: usize,
}

impl EnvironmentField {
    pub fn new(seed: u64, mu: PotentialDistribution, dim: usize) -> Result<EnvironmentField> {
        check_dim(dim)?;
        Ok(EnvironmentField { seed, mu, dim })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> &PotentialDistribution {
        &self.mu
    }

    pub fn value_at(&self, site: &Site) -> f64 {
        self.mu.sample(site_uniform(self.seed, site, self.dim))
    }
}

impl Environment for EnvironmentField {
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn value(&self, site: &Site) -> f64 {
        self.value_at(site)
    }
}

/// A base environment with some sites overwritten.
#[derive(Clone, Debug)]
pub struct PlantedEnvironment<E> {
    base: E,
    overrides: BTreeMap<Site, f64>,
}

impl<E: Environment> PlantedEnvironment<E> {
    pub fn new(base: E) -> Self {
        PlantedEnvironment {
            base,
            overrides: BTreeMap::new(),
        }
    }

    pub fn plant(&mut self, site: Site, value: f64) -> &mut Self {
        self.overrides.insert(site, value);
        self
    }
}

impl<E: Environment> Environment for PlantedEnvironment<E> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, site: &Site) -> f64 {
        match self.overrides.get(site) {
            Some(&v) => v,
            None => self.base.value(site),
        }
    }
}

/// Sites of `bx` with `lambda * V(x) >= eps`, in lexicographic order.
pub fn important_sites<E: Environment + ?Sized>(
    env: &E,
    bx: &SiteBox,
    eps: f64,
    lambda: f64,
    volume_cap: u64,
) -> Result<Vec<Site>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and positive"));
    }
    if bx.dim != env.dim() {
        return Err(Error::param("box", "dimension differs from the environment"));
    }
    let vol = bx.volume();
    if vol > volume_cap {
        return Err(Error::ResourceCap {
            what: "box volume",
            requested: vol,
            cap: volume_cap,
        });
    }
    let threshold = eps / lambda;
    Ok(bx.iter().filter(|x| env.value(x) >= threshold).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(seed: u64) -> EnvironmentField {
        EnvironmentField::new(seed, PotentialDistribution::pareto(0.7, 1.0).unwrap(), 3).unwrap()
    }

    #[test]
    fn values_do_not_depend_on_query_order() {
        let f = field(9);
        let b = SiteBox::centered(3, 3).unwrap();
        let forward: Vec<f64> = b.iter().map(|x| f.value_at(&x)).collect();
        let mut sites: Vec<Site> = b.iter().collect();
        sites.reverse();
        let mut backward: Vec<f64> = sites.iter().map(|x| f.value_at(x)).collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn point_mass_has_no_important_sites_below_threshold() {
        let f = EnvironmentField::new(1, PotentialDistribution::point_mass(1.0).unwrap(), 2).unwrap();
        let b = SiteBox::centered(2, 5).unwrap();
        assert!(important_sites(&f, &b, 0.5, 0.1, DEFAULT_VOLUME_CAP)
            .unwrap()
            .is_empty());
        assert_eq!(
            important_sites(&f, &b, 0.05, 0.1, DEFAULT_VOLUME_CAP).unwrap().len(),
            121
        );
    }

    #[test]
    fn volume_cap_is_enforced() {
        let f = field(1);
        let b = SiteBox::centered(3, 100).unwrap();
        assert!(matches!(
            important_sites(&f, &b, 0.1, 0.1, 1000),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn important_fraction_matches_tail() {
        let f = field(4);
        let b = SiteBox::centered(3, 30).unwrap();
        let (eps, lambda) = (0.2, 0.1);
        let n = important_sites(&f, &b, eps, lambda, DEFAULT_VOLUME_CAP).unwrap().len() as f64;
        let p = f.law().prob_at_least(eps / lambda);
        let vol = b.volume() as f64;
        let sd = (vol * p * (1.0 - p)).sqrt();
        assert!((n - vol * p).abs() < 4.0 * sd, "{n} vs {}", vol * p);
    }

    #[test]
    fn planted_overrides() {
        let mut p = PlantedEnvironment::new(field(2));
        p.plant(Site::new(&[1, 0, 0]), 1e6);
        assert_eq!(p.value(&Site::new(&[1, 0, 0])), 1e6);
        assert_eq!(p.value(&Site::ORIGIN), field(2).value_at(&Site::ORIGIN));
    }
}
