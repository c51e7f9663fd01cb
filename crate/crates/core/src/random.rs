//! Seeded random networks for property checks and sampling harnesses.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::model::{rational_int, Network};
use crate::Rational;

#[derive(Debug, Clone)]
pub struct RandomNetworkConfig {
    pub max_species: usize,
    pub max_reactions: usize,
    pub max_coefficient: i64,
    /// Chance that a drawn reaction is entered as a reversible pair.
    pub reversible_probability: f64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            max_species: 8,
            max_reactions: 10,
            max_coefficient: 3,
            reversible_probability: 0.3,
        }
    }
}

/// Random reaction-form network (disjoint, non-empty sides) within the configured bounds.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomNetworkConfig) -> Network {
    let names: Vec<String> = (0..cfg.max_species.max(2))
        .map(|i| format!("S{i}"))
        .collect();
    loop {
        let n_species = rng.gen_range(2..=cfg.max_species.max(2));
        let target = rng.gen_range(1..=cfg.max_reactions.max(1));
        let mut b = Network::builder();
        while b.reaction_count() < target {
            let mut pool: Vec<usize> = (0..n_species).collect();
            pool.shuffle(rng);
            let n_react = rng.gen_range(1..=3.min(n_species - 1));
            let n_prod = rng.gen_range(1..=2.min(n_species - n_react));
            let side = |ids: &[usize], rng: &mut R| -> Vec<(String, Rational)> {
                ids.iter()
                    .map(|&i| {
                        (
                            names[i].clone(),
                            rational_int(rng.gen_range(1..=cfg.max_coefficient)),
                        )
                    })
                    .collect()
            };
            let reactant = side(&pool[..n_react], rng);
            let product = side(&pool[n_react..n_react + n_prod], rng);
            let reversible = b.reaction_count() + 2 <= target
                && rng.gen_bool(cfg.reversible_probability);
            if reversible {
                b.add_reversible(&reactant, &product, None, None)
                    .expect("disjoint sides");
            } else {
                b.add_reaction(&reactant, &product, None, None)
                    .expect("disjoint sides");
            }
        }
        if let Ok(net) = b.build() {
            return net;
        }
    }
}

/// Positive vector with log-uniform entries in `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|_| rng.gen_range(a..=b).exp()).collect()
}

/// The positive point in `[0.5, 2]^n` that reports use for a given seed.
pub fn seeded_point(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    log_uniform(&mut rng, n, 0.5, 2.0)
}
