//! Green function at the origin and the escape probability `q_d`.
//!
//! Quadrature uses the one-dimensional form of the lattice Fourier integral,
//! `G(0) = d * int_0^inf (e^{-s} I_0(s))^d ds`, obtained from
//! `1/(1 - phi) = int_0^inf e^{-t(1 - phi)} dt` and the factorisation of
//! `e^{t phi}` over coordinates. The tail beyond `S` is integrated term by
//! term from the asymptotic series of `e^{-s} I_0(s)`.

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{fold_replicas, Executor};
use crate::quad::{self, Tolerance};
use crate::rng::{derive_key, replica_rng, tags, Digits};
use crate::site::{Site, MAX_DIM};
use crate::walk::Stepper;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ReturnMethod {
    /// Target absolute error on `q_d`.
    Quadrature { tolerance: f64 },
    /// `walks` walks of `horizon` steps.
    MonteCarlo { walks: u64, horizon: u64, seed: u64 },
}

impl ReturnMethod {
    pub const DEFAULT: ReturnMethod = ReturnMethod::Quadrature { tolerance: 1e-10 };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeConstants {
    pub d: usize,
    pub q_d: f64,
    pub green_at_origin: f64,
    pub method: ReturnMethod,
    /// Quadrature error estimate on `q_d`, or the Monte Carlo standard error.
    pub error: f64,
    /// Monte Carlo only: the subtracted estimate of `P[N < first return < inf]`.
    pub bias_correction: f64,
    /// Monte Carlo only: `sum_{n > N} P[X_n = 0]` from the local limit
    /// theorem, an upper bound on the uncorrected truncation bias.
    pub bias_bound: f64,
}

/// `e^{-x} I_0(x)` for `x >= 0`.
pub fn scaled_bessel_i0(x: f64) -> f64 {
    if x <= 25.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next < 1e-17 * sum || next > term {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * core::f64::consts::PI * x).sqrt()
    }
}

const TAIL_START: f64 = 400.0;
const TAIL_TERMS: usize = 24;

/// `int_S^inf (e^{-s} I_0(s))^d ds` from the asymptotic series.
fn bessel_power_tail(d: usize, s0: f64) -> f64 {
    let mut c = [0.0f64; TAIL_TERMS];
    c[0] = 1.0;
    for k in 1..TAIL_TERMS {
        let m = (2 * k - 1) as f64;
        c[k] = c[k - 1] * m * m / (8.0 * k as f64);
    }
    let mut b = [0.0f64; TAIL_TERMS];
    b[0] = 1.0;
    for _ in 0..d {
        let mut nb = [0.0f64; TAIL_TERMS];
        for i in 0..TAIL_TERMS {
            for j in 0..TAIL_TERMS - i {
                nb[i + j] += b[i] * c[j];
            }
        }
        b = nb;
    }
    let half = 0.5 * d as f64;
    let mut sum = 0.0;
    for (j, bj) in b.iter().enumerate() {
        let e = half + j as f64 - 1.0;
        sum += bj * s0.powf(-e) / e;
    }
    sum * (2.0 * core::f64::consts::PI).powf(-half)
}

/// `G(0)` and its error estimate.
pub fn green_quadrature(d: usize, tolerance: f64) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::param("d", "the walk is recurrent for d < 3"));
    }
    if d > MAX_DIM {
        return Err(Error::param("d", "above MAX_DIM"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let tol = Tolerance {
        abs: 0.1 * tolerance / d as f64,
        rel: 1e-15,
        max_intervals: 10_000,
    };
    let body = quad::integrate(
        |s| scaled_bessel_i0(s).powi(d as i32),
        0.0,
        TAIL_START,
        &[0.5, 2.0, 8.0, 25.0, 60.0, 150.0],
        tol,
    )?;
    let g = d as f64 * (body.value + bessel_power_tail(d, TAIL_START));
    Ok((g, d as f64 * body.error))
}

/// Escape probability `q_d = 1 / G(0)`.
pub fn return_probability<X: Executor + ?Sized>(d: usize, method: ReturnMethod, exec: &X) -> Result<LatticeConstants> {
    if d < 3 {
        return Err(Error::param("d", "the walk is recurrent for d < 3"));
    }
    match method {
        ReturnMethod::Quadrature { tolerance } => {
            let (g, err) = green_quadrature(d, tolerance)?;
            Ok(LatticeConstants {
                d,
                q_d: 1.0 / g,
                green_at_origin: g,
                method,
                error: err / (g * g),
                bias_correction: 0.0,
                bias_bound: 0.0,
            })
        }
        ReturnMethod::MonteCarlo { walks, horizon, seed } => {
            if walks < 2 || horizon < 2 {
                return Err(Error::param("walks/horizon", "need at least 2"));
            }
            if d > MAX_DIM {
                return Err(Error::param("d", "above MAX_DIM"));
            }
            let key = derive_key(seed, &[tags::RETURN, d as u64, horizon]);
            let escaped = fold_replicas(
                exec,
                walks,
                || 0u64,
                |acc, r| {
                    let mut rng = replica_rng(key, r);
                    let mut dg = Digits::new(2 * d as u64);
                    let mut x = Site::ORIGIN;
                    let mut n2: i64 = 0;
                    for _ in 0..horizon {
                        let dir = dg.next(&mut rng);
                        let axis = dir >> 1;
                        let c = x.0[axis] as i64;
                        if dir & 1 == 0 {
                            n2 += 2 * c + 1;
                        } else {
                            n2 += -2 * c + 1;
                        }
                        Stepper::apply(&mut x, dir);
                        if n2 == 0 {
                            return;
                        }
                    }
                    *acc += 1;
                },
                |a, b| *a += b,
            );
            let raw = escaped as f64 / walks as f64;
            let tail = return_tail(d, horizon);
            let corr = raw * raw * tail;
            let q = raw - corr;
            Ok(LatticeConstants {
                d,
                q_d: q,
                green_at_origin: 1.0 / q,
                method,
                error: (raw * (1.0 - raw) / walks as f64).sqrt(),
                bias_correction: corr,
                bias_bound: tail,
            })
        }
    }
}

/// `sum_{n > N} P[X_n = 0]` from the local limit theorem
/// `P[X_{2m} = 0] ~ 2 (d / (4 pi m))^{d/2}`, summed by Euler-Maclaurin.
pub fn return_tail(d: usize, horizon: u64) -> f64 {
    let a = 0.5 * d as f64;
    let m = (horizon / 2) as f64;
    let pref = 2.0 * (d as f64 / (4.0 * core::f64::consts::PI)).powf(a);
    // sum_{k > m} k^{-a}
    let s = m.powf(1.0 - a) / (a - 1.0) - 0.5 * m.powf(-a) + a * m.powf(-a - 1.0) / 12.0;
    pref * s
}

/// `1 / G(0)` from Watson's closed form, used as a fixed reference in tests.
pub fn frozen_q3() -> f64 {
    0.659_462_670_449_001
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    #[allow(clippy::excessive_precision)]
    fn scaled_bessel_matches_reference_values() {
        // reference values from an independent 25-digit evaluation
        let table = [
            (0.5, 0.645_035_270_449_150_07),
            (1.0, 0.465_759_607_593_640_12),
            (10.0, 0.127_833_337_163_428_61),
            (24.99, 0.080_212_985_065_170_695),
            (25.01, 0.080_180_571_857_296_246),
            (30.0, 0.073_145_946_482_237_294),
            (100.0, 0.039_944_379_299_096_683),
            (400.0, 0.019_953_356_281_939_990),
        ];
        for (x, v) in table {
            let got = scaled_bessel_i0(x);
            assert!((got - v).abs() < 2e-15 * v, "x={x}: {got} vs {v}");
        }
        assert_eq!(scaled_bessel_i0(0.0), 1.0);
    }

    #[test]
    fn q3_matches_watson() {
        let c = return_probability(3, ReturnMethod::DEFAULT, &Sequential).unwrap();
        // Watson's integral: G(0) = 1.516386059151978...
        assert!(
            (c.green_at_origin - 1.516_386_059_151_978).abs() < 1e-9,
            "{}",
            c.green_at_origin
        );
        assert!((c.q_d - frozen_q3()).abs() < 1e-12, "{}", c.q_d);
    }

    #[test]
    fn quadrature_is_stable_under_tolerance_halving() {
        for d in 3..=8 {
            let (a, _) = green_quadrature(d, 1e-6).unwrap();
            let (b, _) = green_quadrature(d, 5e-7).unwrap();
            assert!((1.0 / a - 1.0 / b).abs() < 1e-6, "d={d}");
            assert!(a >= 1.0);
            assert!(1.0 / a > 0.0 && 1.0 / a < 1.0);
        }
    }

    #[test]
    fn green_values_match_reference() {
        // G(0) from an independent 25-digit evaluation of the Bessel integral
        let table = [
            (4usize, 1.239_467_121_848_481_7),
            (5, 1.156_308_124_840_231_2),
            (6, 1.116_963_373_226_671_8),
            (7, 1.093_906_315_587_848),
            (8, 1.078_647_012_016_925_6),
        ];
        for (d, g) in table {
            let (got, _) = green_quadrature(d, 1e-10).unwrap();
            assert!((got - g).abs() < 1e-9, "d={d}: {got}");
        }
    }

    #[test]
    fn recurrent_dimensions_are_rejected() {
        assert!(return_probability(2, ReturnMethod::DEFAULT, &Sequential).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature_in_d5() {
        let mc = return_probability(
            5,
            ReturnMethod::MonteCarlo {
                walks: 100_000,
                horizon: 2000,
                seed: 5,
            },
            &Sequential,
        )
        .unwrap();
        let (g, _) = green_quadrature(5, 1e-10).unwrap();
        assert!((mc.q_d - 1.0 / g).abs() < 3.0 * mc.error, "{} vs {}", mc.q_d, 1.0 / g);
    }
}
