use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialDistribution;

/// Intervals `I_0..I_R` of width `eps^2 / lambda` tiling
/// `[eps / lambda, 1 / (eps lambda))`, the last possibly shorter, followed
/// by the terminal interval `[1 / (eps lambda), inf)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub eps: f64,
    pub lambda: f64,
    /// Left endpoints of `I_0..=I_{R+1}`.
    pub lower: Vec<f64>,
    /// Right endpoints; the last is infinite.
    pub upper: Vec<f64>,
    /// `mu(I_j)`, filled by [`IntervalPartition::classify`].
    pub mass: Vec<f64>,
    pub relevant: Vec<bool>,
}

/// Number of finite intervals, which depends on `eps` only.
fn finite_count(eps: f64) -> usize {
    let x = (1.0 / eps - eps) / (eps * eps);
    let k = x.round();
    if (x - k).abs() < 1e-9 * x.max(1.0) {
        k as usize
    } else {
        x.ceil() as usize
    }
}

pub fn partition(eps: f64, lambda: f64) -> Result<IntervalPartition> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", "must lie in (0, 1)"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and positive"));
    }
    let count = finite_count(eps);
    if count > 10_000_000 {
        return Err(Error::ResourceCap {
            what: "interval count",
            requested: count as u64,
            cap: 10_000_000,
        });
    }
    let start = eps / lambda;
    let end = 1.0 / (eps * lambda);
    let width = eps * eps / lambda;
    let mut lower = Vec::with_capacity(count + 1);
    let mut upper = Vec::with_capacity(count + 1);
    for j in 0..count {
        lower.push(start + j as f64 * width);
        upper.push(if j + 1 == count {
            end
        } else {
            start + (j + 1) as f64 * width
        });
    }
    lower.push(end);
    upper.push(f64::INFINITY);
    Ok(IntervalPartition {
        eps,
        lambda,
        lower,
        upper,
        mass: Vec::new(),
        relevant: Vec::new(),
    })
}

impl IntervalPartition {
    /// `R + 2`, the number of intervals including the terminal one.
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Index of the interval holding `v`, or `None` below `eps / lambda`.
    /// Membership is half-open.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.lower[0]) {
            return None;
        }
        let last = self.len() - 1;
        if v >= self.lower[last] {
            return Some(last);
        }
        let width = self.eps * self.eps / self.lambda;
        let mut j = (((v - self.lower[0]) / width) as usize).min(last - 1);
        while v < self.lower[j] {
            j -= 1;
        }
        while v >= self.upper[j] {
            j += 1;
        }
        Some(j)
    }

    /// Flags `I_j` relevant when `mu(I_j) >= eps^9 / L^2`.
    pub fn classify(mut self, mu: &PotentialDistribution, l: f64) -> Result<IntervalPartition> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param("L", "must be finite and positive"));
        }
        let bar = self.relevance_bar(l);
        self.mass = (0..self.len())
            .map(|j| mu.mass_in(self.lower[j], self.upper[j]))
            .collect();
        self.relevant = self.mass.iter().map(|&p| p >= bar).collect();
        Ok(self)
    }

    pub fn relevance_bar(&self, l: f64) -> f64 {
        self.eps.powi(9) / (l * l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_example() {
        let p = partition(0.5, 1.0).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!(p.lower[..6], [0.5, 0.75, 1.0, 1.25, 1.5, 1.75]);
        assert_eq!(p.upper[5], 2.0);
        assert_eq!(p.lower[6], 2.0);
        assert!(p.upper[6].is_infinite());
    }

    #[test]
    fn count_depends_on_eps_only() {
        for eps in [0.5, 0.3, 0.2, 0.15, 0.1] {
            let n = partition(eps, 1.0).unwrap().len();
            for lambda in [1e-4, 3e-3, 0.1, 7.0] {
                let p = partition(eps, lambda).unwrap();
                assert_eq!(p.len(), n);
                let w = eps * eps / lambda;
                for j in 0..p.len() - 2 {
                    assert!((p.upper[j] - p.lower[j] - w).abs() <= 1e-9 * w);
                }
                let last = p.len() - 2;
                assert!(p.upper[last] - p.lower[last] <= w * (1.0 + 1e-9));
            }
        }
        assert_eq!(partition(0.2, 1.0).unwrap().len(), 121);
    }

    #[test]
    fn point_mass_has_one_relevant_interval() {
        let p = partition(0.5, 1.0).unwrap();
        let v = 1.3;
        let j = p.index_of(v).unwrap();
        assert_eq!(j, 3);
        let c = p
            .classify(&PotentialDistribution::point_mass(v).unwrap(), 10.0)
            .unwrap();
        for (k, &r) in c.relevant.iter().enumerate() {
            assert_eq!(r, k == 3);
        }
        let z = partition(0.5, 1.0)
            .unwrap()
            .classify(&PotentialDistribution::point_mass(0.1).unwrap(), 10.0)
            .unwrap();
        assert!(z.relevant.iter().all(|&r| !r));
    }

    #[test]
    fn pareto_flags_match_closed_form() {
        let (a, eps, lambda) = (0.7f64, 0.2, 1e-2);
        let mu = PotentialDistribution::pareto(a, 1.0).unwrap();
        let tail = |x: f64| if x <= 1.0 { 1.0 } else { x.powf(-a) };
        for l in [40.0, 0.07] {
            let p = partition(eps, lambda).unwrap().classify(&mu, l).unwrap();
            let bar = eps.powi(9) / (l * l);
            for j in 0..p.len() {
                let hi = if p.upper[j].is_finite() { tail(p.upper[j]) } else { 0.0 };
                let m = tail(p.lower[j]) - hi;
                assert!((m - p.mass[j]).abs() <= 1e-12 * m, "{j}");
                assert_eq!(p.relevant[j], m >= bar);
            }
            let mixed = p.relevant.iter().any(|&r| r) && p.relevant.iter().any(|&r| !r);
            assert_eq!(mixed, l < 1.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn tiling_is_exact(eps in 0.05f64..0.9, lambda in 1e-4f64..10.0, u in 0.0f64..1.0) {
            let p = partition(eps, lambda).unwrap();
            for j in 0..p.len() - 1 {
                proptest::prop_assert_eq!(p.upper[j], p.lower[j + 1]);
            }
            let v = p.lower[0] + u * (p.lower[p.len() - 1] * 1.5 - p.lower[0]);
            let j = p.index_of(v).unwrap();
            proptest::prop_assert!(p.lower[j] <= v && v < p.upper[j]);
            proptest::prop_assert!(p.index_of(p.lower[0] * (1.0 - 1e-12)).is_none());
        }
    }
}
