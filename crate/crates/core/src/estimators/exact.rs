//! Feynman-Kac linear system on a finite box.
//!
//! For interior `x`, `u(x) = e^{-lambda V(x)} (2d)^{-1} sum_y u(y)`, with
//! `u = 1` on the plane `x_1 = n` and `u = 0` on the absorbing sides. With
//! `D = diag(e^{-lambda V})` and `P` the interior transition matrix this is
//! `u = D (P u + b)`. Setting `u = D^{1/2} w` gives the symmetric positive
//! definite system `(I - D^{1/2} P D^{1/2}) w = D^{1/2} b`, solved by
//! conjugate gradients. The fixed-point residual `u - D(Pu + b)` equals
//! `D^{1/2}` times the CG residual and is checked directly at the end.
//!
//! `u(0)` is the killed walk's survival weight to the plane before leaving
//! the box, so it is a lower bound for the infinite-lattice `Z_n` and grows
//! with the box.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Environment;
use crate::site::{Site, MAX_DIM};

/// Interior `-behind < x_1 < n` and `|x_k| <= half_width` for `k >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PassageBox {
    pub behind: i64,
    pub half_width: i64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOptions {
    /// Required bound on the fixed-point residual.
    pub residual: f64,
    pub max_iterations: usize,
    pub volume_cap: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            residual: 1e-12,
            max_iterations: 200_000,
            volume_cap: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactSolution {
    pub z: f64,
    pub residual: f64,
    pub iterations: usize,
    pub volume: u64,
    pub bx: PassageBox,
}

struct Layout {
    d: usize,
    n1: usize,
    side: usize,
    len: usize,
    stride: [usize; MAX_DIM],
}

impl Layout {
    fn coords(&self, mut i: usize, bx: &PassageBox) -> Site {
        let mut s = Site::ORIGIN;
        s.0[0] = (i % self.n1) as i32 - bx.behind as i32 + 1;
        i /= self.n1;
        for k in 1..self.d {
            s.0[k] = (i % self.side) as i32 - bx.half_width as i32;
            i /= self.side;
        }
        s
    }
}

/// `u(0)` for the box `bx`.
pub fn exact_passage<E: Environment + ?Sized>(
    env: &E,
    lambda: f64,
    n: i64,
    bx: PassageBox,
    opts: &ExactOptions,
) -> Result<ExactSolution> {
    let d = env.dim();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    if n < 1 || bx.behind < 1 || bx.half_width < 0 {
        return Err(Error::param("box", "need n >= 1, behind >= 1, half_width >= 0"));
    }
    let n1 = (n + bx.behind - 1) as u64;
    let side = (2 * bx.half_width + 1) as u64;
    let volume = (1..d).fold(n1, |v, _| v.saturating_mul(side));
    if volume > opts.volume_cap {
        return Err(Error::ResourceCap {
            what: "box volume",
            requested: volume,
            cap: opts.volume_cap,
        });
    }
    let mut stride = [0usize; MAX_DIM];
    stride[0] = 1;
    for k in 1..d {
        stride[k] = stride[k - 1] * if k == 1 { n1 as usize } else { side as usize };
    }
    let lay = Layout {
        d,
        n1: n1 as usize,
        side: side as usize,
        len: volume as usize,
        stride,
    };
    let inv2d = 1.0 / (2 * d) as f64;

    // s = D^{1/2}
    let mut s = vec![0.0; lay.len];
    for (i, si) in s.iter_mut().enumerate() {
        *si = (-0.5 * lambda * env.value(&lay.coords(i, &bx))).exp();
    }
    let mut b = vec![0.0; lay.len];
    for i in 0..lay.len {
        if i % lay.n1 == lay.n1 - 1 {
            b[i] = s[i] * inv2d;
        }
    }

    // y = (I - S P S) v, P restricted to the interior
    let apply = |v: &[f64], y: &mut [f64]| {
        let mut coord = [0usize; MAX_DIM];
        for i in 0..lay.len {
            let mut acc = 0.0;
            if coord[0] > 0 {
                acc += s[i - 1] * v[i - 1];
            }
            if coord[0] + 1 < lay.n1 {
                acc += s[i + 1] * v[i + 1];
            }
            for (k, &c) in coord.iter().enumerate().take(lay.d).skip(1) {
                let st = lay.stride[k];
                if c > 0 {
                    acc += s[i - st] * v[i - st];
                }
                if c + 1 < lay.side {
                    acc += s[i + st] * v[i + st];
                }
            }
            y[i] = v[i] - s[i] * inv2d * acc;
            // advance the mixed-radix coordinate
            let mut k = 0;
            loop {
                coord[k] += 1;
                let lim = if k == 0 { lay.n1 } else { lay.side };
                if coord[k] < lim || k + 1 == lay.d {
                    break;
                }
                coord[k] = 0;
                k += 1;
            }
        }
    };

    let fixed_point_residual = |w: &[f64], scratch: &mut [f64]| -> f64 {
        apply(w, scratch);
        (0..lay.len)
            .map(|i| (s[i] * (b[i] - scratch[i])).abs())
            .fold(0.0, f64::max)
    };

    let mut w = vec![0.0; lay.len];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; lay.len];
    let mut rr: f64 = r.iter().map(|x| x * x).sum();
    let target = opts.residual.min(1e-14);
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    let mut iterations = 0usize;
    let origin = (bx.behind - 1) as usize + (1..d).map(|k| bx.half_width as usize * lay.stride[k]).sum::<usize>();
    loop {
        let res = (0..lay.len).map(|i| (s[i] * r[i]).abs()).fold(0.0, f64::max);
        if res <= target {
            break;
        }
        if res < 0.5 * best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best > 500 || iterations >= opts.max_iterations {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..lay.len {
            w[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if iterations.is_multiple_of(64) {
            // refresh the recursive residual
            apply(&w, &mut ap);
            for i in 0..lay.len {
                r[i] = b[i] - ap[i];
            }
        }
        let rr_new: f64 = r.iter().map(|x| x * x).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..lay.len {
            p[i] = r[i] + beta * p[i];
        }
    }
    let residual = fixed_point_residual(&w, &mut ap);
    if !(residual <= opts.residual) {
        return Err(Error::NonConvergence {
            reason: format!("fixed-point residual {residual:e} after {iterations} iterations"),
        });
    }
    Ok(ExactSolution {
        z: s[origin] * w[origin],
        residual,
        iterations,
        volume,
        bx,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergedPassage {
    pub z: f64,
    /// Successive solutions, box doubling each time.
    pub sequence: Vec<ExactSolution>,
}

/// Doubles the box from `start` until two successive values of `u(0)` agree
/// within `agree`.
pub fn exact_passage_converged<E: Environment + ?Sized>(
    env: &E,
    lambda: f64,
    n: i64,
    start: PassageBox,
    agree: f64,
    opts: &ExactOptions,
) -> Result<ConvergedPassage> {
    let mut bx = start;
    let mut sequence: Vec<ExactSolution> = Vec::new();
    loop {
        let sol = exact_passage(env, lambda, n, bx, opts)?;
        if let Some(prev) = sequence.last() {
            if (sol.z - prev.z).abs() <= agree {
                let z = sol.z;
                sequence.push(sol);
                return Ok(ConvergedPassage { z, sequence });
            }
        }
        sequence.push(sol);
        bx = PassageBox {
            behind: 2 * bx.behind,
            half_width: if env.dim() > 1 { 2 * bx.half_width.max(1) } else { 0 },
        };
    }
}
