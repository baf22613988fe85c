//! Execution strategy for independent work items.
//!
//! Estimators split replicas into fixed-size chunks, evaluate chunks through
//! an [`Executor`] and reduce the results in chunk order. The result is
//! therefore independent of how many workers the executor uses.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub trait Executor: Sync {
    /// Evaluates `f(0), .., f(count - 1)` and returns them in index order.
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Replicas per chunk.
pub const CHUNK: u64 = 512;

/// Runs `per_replica` for every replica index in `0..replicas` and returns
/// the outputs in replica order.
pub fn replicas<X, T, F>(exec: &X, replicas: u64, per_replica: F) -> Vec<T>
where
    X: Executor + ?Sized,
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let chunks = replicas.div_ceil(CHUNK) as usize;
    let parts = exec.map(chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(replicas);
        (start..end).map(&per_replica).collect::<Vec<T>>()
    });
    let mut out = Vec::with_capacity(replicas as usize);
    for p in parts {
        out.extend(p);
    }
    out
}

/// Like [`replicas`] but folds each chunk with `fold` starting from
/// `init()`, then merges chunk results left to right with `merge`.
pub fn fold_replicas<X, A, I, F, M>(exec: &X, replicas: u64, init: I, fold: F, merge: M) -> A
where
    X: Executor + ?Sized,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunks = replicas.div_ceil(CHUNK) as usize;
    let parts = exec.map(chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(replicas);
        let mut acc = init();
        for r in start..end {
            fold(&mut acc, r);
        }
        acc
    });
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// Running sums for a mean and its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, o: Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum / self.n as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        let var = ((self.sum_sq / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}
