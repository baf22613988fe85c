//! Closed-form side: the saturation function `f`, the cost integrals
//! `I_lambda` and `I_{eps,lambda}`, the scale `L_lambda` and the predicted
//! exponent `sqrt(2 d I_lambda)`.

use alloc::string::{String, ToString};

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialDistribution;
use crate::walk::green::green_quadrature;

/// `f(z) = q (1 - e^{-z}) / (1 - (1 - q) e^{-z})`, the expected cost of a
/// visited site of value `z / lambda` once geometric revisits are summed.
pub fn saturation(z: f64, q: f64) -> f64 {
    // 1 - e^{-z} via expm1 keeps f(z) / z accurate near zero
    let a = -(-z).exp_m1();
    q * a / (q + (1.0 - q) * a)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and positive"));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param("q_d", "must lie in (0, 1]"));
    }
    Ok(())
}

/// `I_lambda = E[f(lambda V)]`.
pub fn i_integral(mu: &PotentialDistribution, lambda: f64, q: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_q(q)?;
    mu.expect_in(&|z| saturation(lambda * z, q), 0.0, f64::INFINITY, Some(1.0 / lambda))
}

/// Law of `V` after the values below `cutoff` are replaced by their
/// conditional mean. When no mass lies below the cutoff the law is
/// unchanged.
pub fn truncated_law(mu: &PotentialDistribution, cutoff: f64) -> Result<PotentialDistribution> {
    if mu.prob_below(cutoff) <= 0.0 {
        return Ok(mu.clone());
    }
    mu.truncate(cutoff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    MassAboveCutoff,
    MassBelowCutoff,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub mu: String,
    pub d: usize,
    pub lambda: f64,
    pub eps: f64,
    pub qd: f64,
    pub i_lambda: f64,
    pub i_eps_lambda: f64,
    pub l_lambda: f64,
    pub predicted_alpha: f64,
    /// `P[V >= eps / lambda]`.
    pub tail_mass: f64,
    pub regime: Regime,
}

/// All closed-form quantities at `(mu, eps, lambda, d)`, with `q_d` from
/// quadrature.
pub fn report(mu: &PotentialDistribution, eps: f64, lambda: f64, d: usize) -> Result<AsymptoticReport> {
    if d < 3 {
        return Err(Error::param("d", "need d >= 3"));
    }
    let (g, _) = green_quadrature(d, 1e-10)?;
    report_with_q(mu, eps, lambda, d, 1.0 / g)
}

/// As [`report`] with a given `q_d`.
pub fn report_with_q(mu: &PotentialDistribution, eps: f64, lambda: f64, d: usize, q: f64) -> Result<AsymptoticReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", "must lie in (0, 1)"));
    }
    check_lambda(lambda)?;
    check_q(q)?;
    let i_lambda = i_integral(mu, lambda, q)?;
    let cutoff = eps / lambda;
    let i_eps = i_integral(&truncated_law(mu, cutoff)?, lambda, q)?;
    if !(i_eps > 0.0) {
        return Err(Error::DegenerateScale);
    }
    let l = (2.0 * i_eps).powf(-0.5);
    let tail = mu.prob_at_least(cutoff);
    let regime = if 1.0 / l <= tail.sqrt() / (eps * eps) {
        Regime::MassAboveCutoff
    } else {
        Regime::MassBelowCutoff
    };
    Ok(AsymptoticReport {
        mu: mu.to_string(),
        d,
        lambda,
        eps,
        qd: q,
        i_lambda,
        i_eps_lambda: i_eps,
        l_lambda: l,
        predicted_alpha: (2.0 * d as f64 * i_lambda).sqrt(),
        tail_mass: tail,
        regime,
    })
}

/// `sqrt(2 d lambda E[V])`, the small-`lambda` exponent when `E[V] < inf`.
pub fn integrable_asymptote(mu: &PotentialDistribution, lambda: f64, d: usize) -> Result<f64> {
    check_lambda(lambda)?;
    let m = mu.mean().ok_or(Error::InfiniteMean)?;
    Ok((2.0 * d as f64 * lambda * m).sqrt())
}

/// Exact exponent for the constant potential `lambda V = beta`: the root of
/// `(cosh a + d - 1) / d = e^beta`.
pub fn constant_potential_alpha(d: usize, beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", "must be finite and non-negative"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    // cosh a = 1 + x with x = d (e^beta - 1); acosh(1 + x) = ln1p(x + sqrt(x (2 + x)))
    let x = d as f64 * beta.exp_m1();
    Ok((x + (x * (2.0 + x)).sqrt()).ln_1p())
}

/// Cost of crossing one block of side `L` along the axis, `L sqrt(d) I +
/// sqrt(d) / (2 L)`.
pub fn block_cost(l: f64, i: f64, d: usize) -> Result<f64> {
    if !(l > 0.0 && i > 0.0) {
        return Err(Error::param("L, I", "must be positive"));
    }
    let sd = (d as f64).sqrt();
    Ok(l * sd * i + sd / (2.0 * l))
}

/// Tilt whose per-step weight exactly compensates a per-step cost `beta`.
pub fn tilt_for_cost(d: usize, beta: f64) -> Result<f64> {
    constant_potential_alpha(d, beta)
}

/// Default importance-sampling tilt: the constant-potential root at the
/// predicted per-step cost `I_lambda`.
pub fn default_tilt(mu: &PotentialDistribution, lambda: f64, d: usize, q: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    tilt_for_cost(d, i_integral(mu, lambda, q)?)
}

pub fn regime_name(r: Regime) -> String {
    match r {
        Regime::MassAboveCutoff => "MassAboveCutoff".to_string(),
        Regime::MassBelowCutoff => "MassBelowCutoff".to_string(),
    }
}
