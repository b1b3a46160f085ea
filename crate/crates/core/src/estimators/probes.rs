use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Distribution of probe entries; both satisfy `E[z zᵀ] = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeDistribution {
    /// Independent ±1 entries.
    #[default]
    Rademacher,
    /// Independent standard normal entries.
    Gaussian,
}

/// A reproducible family of random probe vectors.
///
/// Probe `i` is drawn from its own ChaCha stream, so probes can be generated
/// independently and in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeConfig {
    pub count: usize,
    pub distribution: ProbeDistribution,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(count: usize, distribution: ProbeDistribution, seed: u64) -> Self {
        Self {
            count,
            distribution,
            seed,
        }
    }

    pub fn rademacher(count: usize, seed: u64) -> Self {
        Self::new(count, ProbeDistribution::Rademacher, seed)
    }

    /// Probe `index` of dimension `n`.
    pub fn probe(&self, index: usize, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        match self.distribution {
            ProbeDistribution::Rademacher => (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
            ProbeDistribution::Gaussian => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        }
    }
}
