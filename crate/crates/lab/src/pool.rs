use rayon::prelude::*;
use rwrp_core::Executor;

use crate::error::{LabError, Result};

/// Executor backed by a private rayon pool. Core estimators reduce in
/// chunk order, so results do not depend on the number of workers.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `None` uses one worker per available core.
    pub fn new(workers: Option<usize>) -> Result<RayonExecutor> {
        if workers == Some(0) {
            return Err(LabError::config("workers", "must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.unwrap_or(0))
            .build()
            .map_err(|e| LabError::config("workers", e.to_string()))?;
        Ok(RayonExecutor { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwrp_core::estimators::{annealed_cost, McSetup};
    use rwrp_core::walk::WalkConfig;
    use rwrp_core::{PotentialDistribution, Sequential};

    #[test]
    fn matches_sequential_bit_for_bit() {
        let mu = PotentialDistribution::pareto(0.7, 1.0).unwrap();
        let cfg = WalkConfig::new(3, 0.4, 100_000).unwrap();
        let setup = McSetup::new(3000, 9);
        let a = annealed_cost(&mu, 0.3, 5, &cfg, &setup, &Sequential).unwrap();
        for w in [1, 3, 8] {
            let ex = RayonExecutor::new(Some(w)).unwrap();
            assert_eq!(ex.workers(), w);
            let b = annealed_cost(&mu, 0.3, 5, &cfg, &setup, &ex).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        }
    }
}
