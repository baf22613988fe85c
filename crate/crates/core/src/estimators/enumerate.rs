//! Exhaustive `d = 1` oracle for the annealed `Z_n`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialDistribution;

/// `lower <= Z_n <= lower + remainder`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    /// Exact mass of the paths that reach `n` within the horizon.
    pub lower: f64,
    /// Bound on the mass of the paths still running at the horizon.
    pub remainder: f64,
    /// Probability of not arriving within the horizon.
    pub unfinished: f64,
}

impl Bracket {
    pub fn upper(&self) -> f64 {
        self.lower + self.remainder
    }
}

struct Dfs<'a> {
    n: i64,
    tcap: u32,
    offset: i64,
    ln_l: &'a [f64],
    local: Vec<u32>,
    lower: f64,
    remainder: f64,
    unfinished: f64,
}

impl Dfs<'_> {
    fn visit(&mut self, pos: i64, t: u32, lw: f64, max_pos: i64) {
        let idx = (pos + self.offset) as usize;
        let k = self.local[idx] as usize;
        let lw = lw + self.ln_l[k + 1] - self.ln_l[k];
        self.local[idx] += 1;
        let p = 0.5f64.powi(t as i32 + 1);
        for next in [pos + 1, pos - 1] {
            if next >= self.n {
                self.lower += p * lw.exp();
            } else if t + 1 == self.tcap {
                // the current site is charged once more, and every site in
                // (max, n) must still be visited: each first visit costs at
                // most L(lambda), every other factor is at most one
                let m = max_pos.max(next);
                let j = (next + self.offset) as usize;
                let kk = self.local[j] as usize;
                let forced = (self.n - 1 - m).max(0) as f64;
                self.remainder += p * (lw + self.ln_l[kk + 1] - self.ln_l[kk] + forced * self.ln_l[1]).exp();
                self.unfinished += p;
            } else {
                self.visit(next, t + 1, lw, max_pos.max(next));
            }
        }
        self.local[idx] -= 1;
    }
}

/// Sums `prod_x L(lambda l_x)` over all `2^tcap` paths of the one-dimensional
/// walk. Paths that arrive by `tcap` give the exact lower bound; each path
/// still running contributes at most its current weight times the factors it
/// is forced to pay before arriving.
pub fn enumerate_annealed(mu: &PotentialDistribution, lambda: f64, n: i64, tcap: u32) -> Result<Bracket> {
    if !(1..=4).contains(&n) {
        return Err(Error::param("n", "enumeration supports 1 <= n <= 4"));
    }
    if !(1..=20).contains(&tcap) {
        return Err(Error::param("tcap", "enumeration supports 1 <= tcap <= 20"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    let mut ln_l = Vec::with_capacity(tcap as usize + 2);
    for k in 0..=(tcap as usize + 1) {
        ln_l.push(mu.laplace(lambda * k as f64)?.ln());
    }
    let offset = tcap as i64 + 1;
    let mut dfs = Dfs {
        n,
        tcap,
        offset,
        ln_l: &ln_l,
        local: vec![0; (offset + n + 1) as usize],
        lower: 0.0,
        remainder: 0.0,
        unfinished: 0.0,
    };
    dfs.visit(0, 0, 0.0, 0);
    Ok(Bracket {
        lower: dfs.lower,
        remainder: dfs.remainder,
        unfinished: dfs.unfinished,
    })
}
