//! Single-site laws of the potential.
//!
//! Grammar for [`PotentialDistribution::from_str`] and `Display`:
//! `pointmass:v`, `bernoulli:p,v`, `exp:rate`, `pareto:a,xm`,
//! `trunc(<law>):c`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)]
use num_traits::Float;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialDistribution {
    PointMass { value: f64 },
    Bernoulli { p: f64, value: f64 },
    Exponential { rate: f64 },
    Pareto { tail_index: f64, scale: f64 },
    Truncated(Truncation),
}

/// Base law with every value below `cutoff` replaced by the conditional
/// mean below the cutoff. The mixture is never materialised: the base and
/// the cutoff are kept, with the two derived constants cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    base: Box<PotentialDistribution>,
    cutoff: f64,
    prob_below: f64,
    mean_below: f64,
}

impl Truncation {
    pub fn base(&self) -> &PotentialDistribution {
        &self.base
    }
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    /// Value of the atom that replaces the mass below the cutoff.
    pub fn atom(&self) -> f64 {
        self.mean_below
    }
    pub fn atom_mass(&self) -> f64 {
        self.prob_below
    }
}

fn finite_nonneg(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::param(name, format!("{x} is not a finite non-negative number")));
    }
    Ok(())
}

fn finite_pos(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::param(name, format!("{x} is not a finite positive number")));
    }
    Ok(())
}

const QUAD_TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-13,
    max_intervals: 4000,
};

impl PotentialDistribution {
    pub fn point_mass(value: f64) -> Result<Self> {
        finite_nonneg("value", value)?;
        Ok(Self::PointMass { value })
    }

    pub fn bernoulli(p: f64, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} not in [0, 1]")));
        }
        finite_nonneg("value", value)?;
        Ok(Self::Bernoulli { p, value })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        finite_pos("rate", rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn pareto(tail_index: f64, scale: f64) -> Result<Self> {
        finite_pos("tail_index", tail_index)?;
        finite_pos("scale", scale)?;
        Ok(Self::Pareto { tail_index, scale })
    }

    /// Replaces the values below `cutoff` by their conditional mean.
    pub fn truncate(&self, cutoff: f64) -> Result<Self> {
        finite_pos("cutoff", cutoff)?;
        let prob_below = self.prob_below(cutoff);
        if prob_below <= 0.0 {
            return Err(Error::DegenerateTruncation { cutoff });
        }
        let mean_below = self.partial_mean_below(cutoff) / prob_below;
        Ok(Self::Truncated(Truncation {
            base: Box::new(self.clone()),
            cutoff,
            prob_below,
            mean_below,
        }))
    }

    /// `P[V < x]`.
    pub fn prob_below(&self, x: f64) -> f64 {
        1.0 - self.prob_at_least(x)
    }

    /// `P[V >= x]`, computed directly so that far tails keep precision.
    pub fn prob_at_least(&self, x: f64) -> f64 {
        match self {
            Self::PointMass { value } => (*value >= x) as u8 as f64,
            Self::Bernoulli { p, value } => {
                let mut s = 0.0;
                if 0.0 >= x {
                    s += 1.0 - p;
                }
                if *value >= x {
                    s += p;
                }
                s
            }
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Self::Pareto { tail_index, scale } => {
                if x <= *scale {
                    1.0
                } else {
                    (scale / x).powf(*tail_index)
                }
            }
            Self::Truncated(t) => {
                let mut s = 0.0;
                if t.mean_below >= x {
                    s += t.prob_below;
                }
                s + t.base.prob_at_least(x.max(t.cutoff))
            }
        }
    }

    /// `P[V <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::PointMass { value } => (*value <= x) as u8 as f64,
            Self::Bernoulli { p, value } => {
                let mut s = 0.0;
                if 0.0 <= x {
                    s += 1.0 - p;
                }
                if *value <= x {
                    s += p;
                }
                s
            }
            Self::Exponential { .. } | Self::Pareto { .. } => self.prob_below(x),
            Self::Truncated(t) => {
                let mut s = 0.0;
                if t.mean_below <= x {
                    s += t.prob_below;
                }
                if x >= t.cutoff {
                    s += t.base.cdf(x) - t.prob_below;
                }
                s
            }
        }
    }

    /// `P[lo <= V < hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (self.prob_at_least(lo) - self.prob_at_least(hi)).max(0.0)
    }

    /// `E[V; V < c]`.
    pub fn partial_mean_below(&self, c: f64) -> f64 {
        match self {
            Self::PointMass { value } => {
                if *value < c {
                    *value
                } else {
                    0.0
                }
            }
            Self::Bernoulli { p, value } => {
                if *value < c {
                    p * value
                } else {
                    0.0
                }
            }
            Self::Exponential { rate } => {
                if c <= 0.0 {
                    return 0.0;
                }
                let rc = rate * c;
                // (1 - e^{-rc}(1 + rc)) / rate, written to stay accurate for small rc
                let e = (-rc).exp();
                let v = if rc < 1e-3 {
                    rc * rc * (0.5 - rc / 3.0 + rc * rc / 8.0)
                } else {
                    -(-rc).exp_m1() - rc * e
                };
                v / rate
            }
            Self::Pareto {
                tail_index: a,
                scale: xm,
            } => {
                if c <= *xm {
                    return 0.0;
                }
                let a = *a;
                if (a - 1.0).abs() < 1e-12 {
                    xm * (c / xm).ln()
                } else {
                    // a xm^a (c^{1-a} - xm^{1-a}) / (1 - a)
                    a * xm * (((1.0 - a) * (c / xm).ln()).exp_m1()) / (1.0 - a)
                }
            }
            Self::Truncated(t) => {
                let mut s = 0.0;
                if t.mean_below < c {
                    s += t.prob_below * t.mean_below;
                }
                if c > t.cutoff {
                    s += t.base.partial_mean_below(c) - t.base.partial_mean_below(t.cutoff);
                }
                s
            }
        }
    }

    /// `E[V]`, or `None` when infinite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::PointMass { value } => Some(*value),
            Self::Bernoulli { p, value } => Some(p * value),
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Pareto { tail_index, scale } => {
                if *tail_index > 1.0 {
                    Some(tail_index * scale / (tail_index - 1.0))
                } else {
                    None
                }
            }
            Self::Truncated(t) => {
                let base = t.base.mean()?;
                Some(t.prob_below * t.mean_below + base - t.base.partial_mean_below(t.cutoff))
            }
        }
    }

    /// `(P[V >= c], E[V | V < c])`.
    pub fn tail_and_conditional_mean(&self, c: f64) -> Result<(f64, f64)> {
        finite_pos("cutoff", c)?;
        let below = self.prob_below(c);
        if below <= 0.0 {
            return Err(Error::DegenerateTruncation { cutoff: c });
        }
        Ok((self.prob_at_least(c), self.partial_mean_below(c) / below))
    }

    /// Inverse-CDF sample from a uniform `u` in [0, 1).
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Self::PointMass { value } => *value,
            Self::Bernoulli { p, value } => {
                if u < 1.0 - p {
                    0.0
                } else {
                    *value
                }
            }
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::Pareto { tail_index, scale } => scale * (1.0 - u).powf(-1.0 / tail_index),
            Self::Truncated(t) => {
                let x = t.base.sample(u);
                if x < t.cutoff {
                    t.mean_below
                } else {
                    x
                }
            }
        }
    }

    /// `E[g(V); lo <= V < hi]` for bounded `g`. `hint` marks a value where
    /// `g` changes scale; it becomes a quadrature breakpoint.
    pub fn expect_in<G: Fn(f64) -> f64>(&self, g: &G, lo: f64, hi: f64, hint: Option<f64>) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let inside = |x: f64| lo <= x && x < hi;
        match self {
            Self::PointMass { value } => Ok(if inside(*value) { g(*value) } else { 0.0 }),
            Self::Bernoulli { p, value } => {
                let mut s = 0.0;
                if inside(0.0) {
                    s += (1.0 - p) * g(0.0);
                }
                if inside(*value) {
                    s += p * g(*value);
                }
                Ok(s)
            }
            Self::Exponential { rate } => {
                // s = P[V >= x] = e^{-rate x}, x = -ln(s) / rate
                let s_hi = self.prob_at_least(hi);
                let s_lo = self.prob_at_least(lo);
                let r = *rate;
                let breaks = hint.map(|h| self.prob_at_least(h));
                let br: &[f64] = match &breaks {
                    Some(b) => core::slice::from_ref(b),
                    None => &[],
                };
                Ok(quad::integrate(|s| g(-s.ln() / r), s_hi, s_lo, br, QUAD_TOL)?.value)
            }
            Self::Pareto { tail_index, scale } => {
                // s = (xm / x)^a, x = xm s^{-1/a}
                let s_hi = self.prob_at_least(hi);
                let s_lo = self.prob_at_least(lo);
                let ia = 1.0 / tail_index;
                let xm = *scale;
                let breaks = hint.map(|h| self.prob_at_least(h));
                let br: &[f64] = match &breaks {
                    Some(b) => core::slice::from_ref(b),
                    None => &[],
                };
                Ok(quad::integrate(|s| g(xm * s.powf(-ia)), s_hi, s_lo, br, QUAD_TOL)?.value)
            }
            Self::Truncated(t) => {
                let mut s = 0.0;
                if inside(t.mean_below) {
                    s += t.prob_below * g(t.mean_below);
                }
                Ok(s + t.base.expect_in(g, lo.max(t.cutoff), hi, hint)?)
            }
        }
    }

    /// Laplace transform `E[exp(-t V)]`, `t >= 0`.
    pub fn laplace(&self, t: f64) -> Result<f64> {
        finite_nonneg("t", t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        match self {
            Self::PointMass { value } => Ok((-t * value).exp()),
            Self::Bernoulli { p, value } => Ok(1.0 - p + p * (-t * value).exp()),
            Self::Exponential { rate } => Ok(rate / (rate + t)),
            Self::Pareto { .. } => self.expect_in(&|x| (-t * x).exp(), 0.0, f64::INFINITY, Some(1.0 / t)),
            Self::Truncated(tr) => {
                let atom = tr.prob_below * (-t * tr.mean_below).exp();
                Ok(atom
                    + tr.base
                        .expect_in(&|x| (-t * x).exp(), tr.cutoff, f64::INFINITY, Some(1.0 / t))?)
            }
        }
    }

    /// Smallest value in the support.
    pub fn support_min(&self) -> f64 {
        match self {
            Self::PointMass { value } => *value,
            Self::Bernoulli { p, value } => {
                if *p >= 1.0 {
                    *value
                } else {
                    0.0
                }
            }
            Self::Exponential { .. } => 0.0,
            Self::Pareto { scale, .. } => *scale,
            Self::Truncated(t) => t.mean_below.min(t.cutoff),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::Exponential { .. } | Self::Pareto { .. })
    }
}

impl fmt::Display for PotentialDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PointMass { value } => write!(f, "pointmass:{value}"),
            Self::Bernoulli { p, value } => write!(f, "bernoulli:{p},{value}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Pareto { tail_index, scale } => write!(f, "pareto:{tail_index},{scale}"),
            Self::Truncated(t) => write!(f, "trunc({}):{}", t.base, t.cutoff),
        }
    }
}

impl Serialize for PotentialDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.into(),
        reason: reason.into(),
    }
}

fn parse_f64(input: &str, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(input, format!("`{field}` is not a number")))
}

fn parse_args<const N: usize>(input: &str, args: &str) -> Result<[f64; N]> {
    let parts: alloc::vec::Vec<&str> = args.split(',').collect();
    if parts.len() != N {
        return Err(parse_err(
            input,
            format!("expected {N} argument(s), got {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_f64(input, p)?;
    }
    Ok(out)
}

impl FromStr for PotentialDistribution {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        if let Some(rest) = s.strip_prefix("trunc(") {
            let close = rest
                .rfind(')')
                .ok_or_else(|| parse_err(input, "unbalanced parenthesis"))?;
            let inner: PotentialDistribution = rest[..close].parse()?;
            let tail = rest[close + 1..]
                .strip_prefix(':')
                .ok_or_else(|| parse_err(input, "missing `:cutoff` after trunc(..)"))?;
            let c = parse_f64(input, tail)?;
            return inner.truncate(c);
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| parse_err(input, "expected `<kind>:<args>`"))?;
        match kind.trim() {
            "pointmass" => {
                let [v] = parse_args::<1>(input, args)?;
                Self::point_mass(v)
            }
            "bernoulli" => {
                let [p, v] = parse_args::<2>(input, args)?;
                Self::bernoulli(p, v)
            }
            "exp" => {
                let [r] = parse_args::<1>(input, args)?;
                Self::exponential(r)
            }
            "pareto" => {
                let [a, xm] = parse_args::<2>(input, args)?;
                Self::pareto(a, xm)
            }
            other => Err(parse_err(input, format!("unknown law `{other}`"))),
        }
    }
}
