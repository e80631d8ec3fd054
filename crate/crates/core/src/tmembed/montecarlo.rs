use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernel::NoisySystem;

/// Equal-width histogram of visited states on [0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of samples in each bin.
    pub fn masses(&self) -> Vec<f64> {
        let t = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Fraction of samples in `[a, b]`, rounded outward to bin edges.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let n = self.bins() as f64;
        let lo = ((a * n).floor().max(0.0) as usize).min(self.bins());
        let hi = ((b * n).ceil().max(0.0) as usize).min(self.bins());
        self.masses()[lo..hi].iter().sum()
    }

    /// Total variation `½ Σ |p_k - q_k|` against per-bin masses `q`.
    pub fn tv_to(&self, q: &[f64]) -> f64 {
        assert_eq!(q.len(), self.bins());
        0.5 * self.masses().iter().zip(q).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }

    fn merge(&mut self, o: &Histogram) {
        self.counts.iter_mut().zip(&o.counts).for_each(|(a, b)| *a += b);
    }
}

/// Simulate `x_{t+1} = f(x_t) + ε Z` conditioned on landing in [0, 1]
/// (rejection sampling), starting from `x0`, and histogram the states after
/// the first `burn_in` of `steps` steps.
pub fn monte_carlo_invariant(
    f: &dyn Fn(f64) -> f64,
    eps: f64,
    x0: f64,
    steps: u64,
    burn_in: u64,
    seed: u64,
    bins: usize,
) -> Histogram {
    assert!(steps >= burn_in, "steps must be at least burn_in");
    assert!(bins > 0, "need at least one bin");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; bins];
    let mut x = x0;
    for t in 0..steps {
        let m = f(x);
        x = loop {
            let z: f64 = rng.sample(StandardNormal);
            let y = m + eps * z;
            if (0.0..=1.0).contains(&y) {
                break y;
            }
        };
        if t >= burn_in {
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    Histogram { counts }
}

/// [`monte_carlo_invariant`] for a [`NoisySystem`], started at 1/2.
pub fn monte_carlo_system(sys: &NoisySystem, steps: u64, burn_in: u64, seed: u64, bins: usize) -> Histogram {
    let eps = sys.kernel.eps_f64();
    monte_carlo_invariant(&|x| sys.map.eval_f64(x), eps, 0.5, steps, burn_in, seed, bins)
}

/// Independent chains, one per seed, run on scoped threads and summed in seed
/// order.
pub fn monte_carlo_merged(
    f: &(dyn Fn(f64) -> f64 + Sync),
    eps: f64,
    x0: f64,
    steps: u64,
    burn_in: u64,
    seeds: &[u64],
    bins: usize,
) -> Histogram {
    let parts: Vec<Histogram> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| s.spawn(move || monte_carlo_invariant(f, eps, x0, steps, burn_in, seed, bins)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain panicked")).collect()
    });
    let mut out = Histogram { counts: vec![0; bins] };
    for p in &parts {
        out.merge(p);
    }
    out
}
