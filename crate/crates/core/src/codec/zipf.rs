//! Zipf-distributed string pool for workload generation.
//!
//! `n` distinct strings where rank `r` is drawn with probability
//! proportional to `r^(-s)`. Sampling is inverse-CDF with one uniform per
//! draw, so a seeded RNG yields a reproducible draw sequence.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct ZipfPool {
    values: Vec<String>,
    /// Cumulative rank probabilities; last entry is 1.0.
    cdf: Vec<f64>,
}

impl ZipfPool {
    /// Build a pool of `n` distinct strings of `len` bytes with Zipf
    /// parameter `s`, deterministically from `seed`.
    pub fn generate(n: usize, s: f64, len: usize, seed: u64) -> Self {
        assert!(n >= 1, "pool needs at least one value");
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(n);
        let mut seen = std::collections::HashSet::with_capacity(n);
        const ALPHA: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
        while values.len() < n {
            let v: String =
                (0..len).map(|_| ALPHA[rng.gen_range(0..ALPHA.len())] as char).collect();
            if seen.insert(v.clone()) {
                values.push(v);
            }
        }
        Self::from_values(values, s)
    }

    /// Build from explicit values; rank = position in `values`.
    pub fn from_values(values: Vec<String>, s: f64) -> Self {
        assert!(!values.is_empty());
        assert!(s >= 0.0, "zipf parameter must be non-negative");
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0f64;
        for r in 1..=values.len() {
            acc += (r as f64).powf(-s);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Self { values, cdf }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// Probability of drawing rank `r` (1-based).
    pub fn probability(&self, rank: usize) -> f64 {
        assert!(rank >= 1 && rank <= self.values.len());
        let lo = if rank == 1 { 0.0 } else { self.cdf[rank - 2] };
        self.cdf[rank - 1] - lo
    }

    /// Draw one value.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, rng: &mut R) -> &'a str {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c < u).min(self.values.len() - 1);
        &self.values[idx]
    }

    /// Fraction of the draw mass carried by values starting with `prefix`.
    pub fn prefix_mass(&self, prefix: &str) -> f64 {
        (1..=self.values.len())
            .filter(|&r| self.values[r - 1].starts_with(prefix))
            .map(|r| self.probability(r))
            .sum()
    }
}
