//! Seeded random instances for tests and benchmarks.

use std::ops::RangeInclusive;

use rand::Rng;

use crate::model::RaiInstance;

/// Shape of a random interval instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusShape {
    pub machines: RangeInclusive<usize>,
    pub jobs: RangeInclusive<usize>,
    pub sizes: RangeInclusive<u64>,
}

impl Default for CorpusShape {
    /// 2 to 6 machines, 1 to 10 jobs, sizes 1 to 20.
    fn default() -> Self {
        CorpusShape {
            machines: 2..=6,
            jobs: 1..=10,
            sizes: 1..=20,
        }
    }
}

/// Draws machine count, job count, sizes and intervals uniformly.
pub fn random_rai<R: Rng + ?Sized>(shape: &CorpusShape, rng: &mut R) -> RaiInstance {
    let m = rng.gen_range(shape.machines.clone());
    let n = rng.gen_range(shape.jobs.clone());
    let jobs: Vec<(u64, usize, usize)> = (0..n)
        .map(|_| {
            let size = rng.gen_range(shape.sizes.clone());
            let first = rng.gen_range(0..m);
            let last = rng.gen_range(first..m);
            (size, first, last)
        })
        .collect();
    RaiInstance::from_intervals(m, jobs).expect("random intervals lie within the machine range")
}

/// `count` instances from one seeded stream.
pub fn corpus<R: Rng + ?Sized>(shape: &CorpusShape, count: usize, rng: &mut R) -> Vec<RaiInstance> {
    (0..count).map(|_| random_rai(shape, rng)).collect()
}
