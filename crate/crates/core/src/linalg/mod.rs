//! Sparse storage and the direct solver used by the implicit stage equations.

mod csr;
mod envelope;

pub use csr::CsrMatrix;
pub use envelope::{EnvelopeLu, RefinedSolver};

use crate::error::Result;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Neumaier-compensated sum; invariants of long runs are sums of thousands of terms.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Factorizations of `build(coeff)` keyed by the exact bit pattern of `coeff`.
///
/// Uniform time steps produce at most one distinct coefficient per implicit
/// stage, so the cache stays small over a run.
#[derive(Default)]
pub struct FactorCache {
    entries: Mutex<HashMap<u64, Arc<RefinedSolver>>>,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_factor(
        &self,
        coeff: f64,
        build: impl FnOnce(f64) -> CsrMatrix,
    ) -> Result<Arc<RefinedSolver>> {
        let key = coeff.to_bits();
        if let Some(s) = self.entries.lock().unwrap().get(&key) {
            return Ok(Arc::clone(s));
        }
        // Factor outside the lock; a concurrent duplicate is harmless.
        let solver = Arc::new(RefinedSolver::new(build(coeff))?);
        let mut map = self.entries.lock().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(solver)))
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.lock().unwrap().clear();
    }
}

impl std::fmt::Debug for FactorCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorCache").field("entries", &self.len()).finish()
    }
}
