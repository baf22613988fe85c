//! Lattice sites and integer boxes.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 8;

/// A point of `Z^d`. Coordinates past the working dimension stay zero, so
/// equality and hashing only see the live coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site(pub [i32; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn new(coords: &[i32]) -> Site {
        assert!(coords.len() <= MAX_DIM, "dimension above MAX_DIM");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn axis(k: usize, value: i32) -> Site {
        let mut c = [0; MAX_DIM];
        c[k] = value;
        Site(c)
    }

    #[inline]
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Site) -> i64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| {
                let t = a as i64 - b as i64;
                t * t
            })
            .sum()
    }

    pub fn offset(&self, other: &Site) -> Site {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(other.0.iter()) {
            *x += *y;
        }
        Site(c)
    }

    /// `self - other`.
    pub fn minus(&self, other: &Site) -> Site {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(other.0.iter()) {
            *x -= *y;
        }
        Site(c)
    }

    pub fn coords(&self, d: usize) -> &[i32] {
        &self.0[..d]
    }

    pub fn to_vec(&self, d: usize) -> Vec<i64> {
        self.0[..d].iter().map(|&c| c as i64).collect()
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&c| c != 0).map_or(1, |i| i + 1);
        f.debug_list().entries(&self.0[..last]).finish()
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::param("d", alloc::format!("{d} not in 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Closed integer box `lo <= x <= hi` in the first `dim` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteBox {
    pub dim: usize,
    pub lo: Site,
    pub hi: Site,
}

impl SiteBox {
    pub fn new(dim: usize, lo: &[i32], hi: &[i32]) -> Result<SiteBox> {
        check_dim(dim)?;
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::param("box", "corner length differs from dimension"));
        }
        Ok(SiteBox {
            dim,
            lo: Site::new(lo),
            hi: Site::new(hi),
        })
    }

    /// Box `[-r, r]^d`.
    pub fn centered(dim: usize, r: i32) -> Result<SiteBox> {
        check_dim(dim)?;
        let lo = [-r; MAX_DIM];
        let hi = [r; MAX_DIM];
        SiteBox::new(dim, &lo[..dim], &hi[..dim])
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|k| self.hi.0[k] < self.lo.0[k])
    }

    pub fn volume(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        (0..self.dim)
            .map(|k| (self.hi.0[k] as i64 - self.lo.0[k] as i64 + 1) as u64)
            .fold(1u64, |a, b| a.saturating_mul(b))
    }

    pub fn contains(&self, x: &Site) -> bool {
        (0..self.dim).all(|k| self.lo.0[k] <= x.0[k] && x.0[k] <= self.hi.0[k])
    }

    /// Sites in lexicographic order, last coordinate fastest.
    pub fn iter(&self) -> SiteBoxIter {
        SiteBoxIter {
            bx: *self,
            next: if self.is_empty() { None } else { Some(self.lo) },
        }
    }
}

pub struct SiteBoxIter {
    bx: SiteBox,
    next: Option<Site>,
}

impl Iterator for SiteBoxIter {
    type Item = Site;

    fn next(&mut self) -> Option<Site> {
        let cur = self.next?;
        let mut n = cur;
        let mut k = self.bx.dim;
        loop {
            if k == 0 {
                self.next = None;
                break;
            }
            k -= 1;
            if n.0[k] < self.bx.hi.0[k] {
                n.0[k] += 1;
                self.next = Some(n);
                break;
            }
            n.0[k] = self.bx.lo.0[k];
        }
        Some(cur)
    }
}

/// Axis-aligned open region with possibly infinite sides, used for tubes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpenBox {
    pub dim: usize,
    pub lo: [f64; MAX_DIM],
    pub hi: [f64; MAX_DIM],
}

impl OpenBox {
    pub fn unbounded(dim: usize) -> OpenBox {
        OpenBox {
            dim,
            lo: [f64::NEG_INFINITY; MAX_DIM],
            hi: [f64::INFINITY; MAX_DIM],
        }
    }

    pub fn with_side(mut self, k: usize, lo: f64, hi: f64) -> OpenBox {
        self.lo[k] = lo;
        self.hi[k] = hi;
        self
    }

    #[inline]
    pub fn contains(&self, x: &Site) -> bool {
        (0..self.dim).all(|k| {
            let v = x.0[k] as f64;
            self.lo[k] < v && v < self.hi[k]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_iteration_covers_volume() {
        let b = SiteBox::new(3, &[-1, 0, 2], &[1, 1, 4]).unwrap();
        let v: Vec<Site> = b.iter().collect();
        assert_eq!(v.len() as u64, b.volume());
        assert_eq!(v.len(), 18);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|s| b.contains(s)));
    }

    #[test]
    fn empty_box() {
        let b = SiteBox::new(2, &[0, 0], &[-1, 3]).unwrap();
        assert_eq!(b.volume(), 0);
        assert_eq!(b.iter().count(), 0);
    }

    #[test]
    fn distances() {
        let a = Site::new(&[1, -2, 3]);
        assert_eq!(a.norm_sq(), 14);
        assert_eq!(a.dist_sq(&Site::new(&[1, 0, 0])), 13);
        assert_eq!(std::format!("{:?}", a), "[1, -2, 3]");
    }
}
