//! Oriented site percolation on `{(i, j): i >= 0, i + j even}` with edges
//! `(i, j) -> (i + 1, j +- 1)`, blocks of the environment as sites, and
//! directed open paths.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::coarse::{region_is_good, GoodnessParams};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::field::Environment;
use crate::potential::PotentialDistribution;
use crate::rng::{mix64, unit_from_bits, WordHasher};
use crate::site::{Site, SiteBox, MAX_DIM};

/// Open sites of columns `0..=n` and rows `|j| <= jmax`. Sites with `i + j`
/// odd are never open.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrientedGrid {
    pub n: usize,
    pub jmax: i64,
    /// `rows[i][j + jmax]`.
    rows: Vec<Vec<bool>>,
}

impl OrientedGrid {
    pub fn from_fn<F: FnMut(usize, i64) -> bool>(n: usize, jmax: i64, mut open: F) -> Result<OrientedGrid> {
        if n < 1 || jmax < 1 {
            return Err(Error::param("N", "need N >= 1 and Jmax >= 1"));
        }
        let rows = (0..=n)
            .map(|i| (-jmax..=jmax).map(|j| (i as i64 + j) % 2 == 0 && open(i, j)).collect())
            .collect();
        Ok(OrientedGrid { n, jmax, rows })
    }

    /// Each valid site open independently with probability `p`, from a
    /// counter-based hash of `(seed, i, j)`.
    pub fn iid(n: usize, jmax: i64, p: f64, seed: u64) -> Result<OrientedGrid> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", "must lie in [0, 1]"));
        }
        let key = mix64(seed);
        OrientedGrid::from_fn(n, jmax, |i, j| {
            let h = WordHasher::new().push(key).push(i as u64).push(j as u64).finish();
            unit_from_bits(h) < p
        })
    }

    pub fn is_open(&self, i: usize, j: i64) -> bool {
        i <= self.n && j.abs() <= self.jmax && self.rows[i][(j + self.jmax) as usize]
    }

    pub fn set_open(&mut self, i: usize, j: i64, open: bool) {
        if i <= self.n && j.abs() <= self.jmax && (i as i64 + j) % 2 == 0 {
            self.rows[i][(j + self.jmax) as usize] = open;
        }
    }

    pub fn open_count(&self) -> usize {
        self.rows.iter().map(|r| r.iter().filter(|&&o| o).count()).sum()
    }

    /// Number of sites with `i + j` even.
    pub fn site_count(&self) -> usize {
        (0..=self.n)
            .map(|i| (-self.jmax..=self.jmax).filter(|j| (i as i64 + j) % 2 == 0).count())
            .sum()
    }
}

/// Rows reachable from `(i, j)` in one step, in preference order: smaller
/// `|j|` first, positive before negative on ties.
fn key(j: i64) -> (i64, bool) {
    (j.abs(), j < 0)
}

/// The smallest open path `j_0 = 0, .., j_N` under the order of rows by
/// `(|j|, positive first)`, compared lexicographically. Rows beyond `jmax`
/// are treated as closed.
pub fn directed_path(grid: &OrientedGrid) -> Option<Vec<i64>> {
    let w = (2 * grid.jmax + 1) as usize;
    // feasible[i][k]: an open path runs from (i, k - jmax) to column N
    let mut feasible = vec![vec![false; w]; grid.n + 1];
    feasible[grid.n].copy_from_slice(&grid.rows[grid.n]);
    for i in (0..grid.n).rev() {
        for k in 0..w {
            feasible[i][k] =
                grid.rows[i][k] && ((k + 1 < w && feasible[i + 1][k + 1]) || (k > 0 && feasible[i + 1][k - 1]));
        }
    }
    let at = |i: usize, j: i64| j.abs() <= grid.jmax && feasible[i][(j + grid.jmax) as usize];
    if !at(0, 0) {
        return None;
    }
    let mut path = vec![0i64];
    let mut j = 0;
    for i in 1..=grid.n {
        let mut next = [j + 1, j - 1];
        next.sort_by_key(|&c| key(c));
        j = *next.iter().find(|&&c| at(i, c))?;
        path.push(j);
    }
    Some(path)
}

/// Whether `path` starts at row 0, moves by `+-1` per column and stays open.
pub fn path_is_valid(grid: &OrientedGrid, path: &[i64]) -> bool {
    path.len() == grid.n + 1
        && path[0] == 0
        && path.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
        && path.iter().enumerate().all(|(i, &j)| grid.is_open(i, j))
}

/// Rows top to bottom: `*` on the path, `o` open, `#` closed, `.` for
/// sites of the wrong parity.
pub fn render(grid: &OrientedGrid, path: Option<&[i64]>) -> String {
    let mut s = String::new();
    for j in (-grid.jmax..=grid.jmax).rev() {
        for i in 0..=grid.n {
            let c = if (i as i64 + j) % 2 != 0 {
                '.'
            } else if path.is_some_and(|p| p[i] == j) {
                '*'
            } else if grid.is_open(i, j) {
                'o'
            } else {
                '#'
            };
            s.push(c);
        }
        s.push('\n');
    }
    s
}

/// `B_{i,j} = (i M L - 4L, (iM + M + 1) L) x ((j - 3) sqrt(M) L, (j + 3) sqrt(M) L) x (-3 sqrt(M) L, 3 sqrt(M) L)^{d-2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockGeometry {
    pub d: usize,
    pub m: f64,
    pub l: f64,
}

fn interior(a: f64, b: f64) -> (i32, i32) {
    ((a.floor() + 1.0) as i32, (b.ceil() - 1.0) as i32)
}

impl BlockGeometry {
    pub fn new(d: usize, m: f64, l: f64) -> Result<BlockGeometry> {
        crate::site::check_dim(d)?;
        if d < 2 {
            return Err(Error::param("d", "blocks need d >= 2"));
        }
        if !(m >= 1.0 && l > 0.0 && m.is_finite() && l.is_finite()) {
            return Err(Error::param("M", "need M >= 1 and L > 0"));
        }
        Ok(BlockGeometry { d, m, l })
    }

    /// Lattice sites of the open block `B_{i,j}`.
    pub fn block(&self, i: i64, j: i64) -> SiteBox {
        let (ml, s) = (self.m * self.l, self.m.sqrt() * self.l);
        let mut lo = [0i32; MAX_DIM];
        let mut hi = [0i32; MAX_DIM];
        let sides = [
            (
                i as f64 * ml - 4.0 * self.l,
                (i as f64 * self.m + self.m + 1.0) * self.l,
            ),
            ((j as f64 - 3.0) * s, (j as f64 + 3.0) * s),
        ];
        for k in 0..self.d {
            let (a, b) = if k < 2 { sides[k] } else { (-3.0 * s, 3.0 * s) };
            (lo[k], hi[k]) = interior(a, b);
        }
        SiteBox {
            dim: self.d,
            lo: Site(lo),
            hi: Site(hi),
        }
    }
}

/// Opens `(i, j)` when `B_{i,j}` is good. Blocks are certified in parallel;
/// the summed block volume is capped by `gp.volume_cap`.
#[allow(clippy::too_many_arguments)]
pub fn build_grid<E: Environment + ?Sized, X: Executor + ?Sized>(
    env: &E,
    mu: &PotentialDistribution,
    gp: &GoodnessParams,
    geom: &BlockGeometry,
    n: usize,
    jmax: i64,
    exec: &X,
) -> Result<OrientedGrid> {
    if env.dim() != geom.d {
        return Err(Error::param("d", "differs from the environment"));
    }
    let empty = OrientedGrid::from_fn(n, jmax, |_, _| false)?;
    let sites: Vec<(usize, i64)> = (0..=n)
        .flat_map(|i| {
            (-jmax..=jmax)
                .filter(move |j| (i as i64 + j) % 2 == 0)
                .map(move |j| (i, j))
        })
        .collect();
    let volume = geom.block(0, 0).volume().saturating_mul(sites.len() as u64);
    if volume > gp.volume_cap {
        return Err(Error::ResourceCap {
            what: "certified volume",
            requested: volume,
            cap: gp.volume_cap,
        });
    }
    let verdicts = exec.map(sites.len(), |k| {
        let (i, j) = sites[k];
        region_is_good(env, mu, &geom.block(i as i64, j), gp)
    });
    let mut grid = empty;
    for (&(i, j), v) in sites.iter().zip(verdicts) {
        grid.set_open(i, j, v?);
    }
    Ok(grid)
}
