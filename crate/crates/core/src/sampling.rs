//! Seeded random number generation and random game instances.
//!
//! All randomness goes through [`SimRng`], the ChaCha stream cipher with 8
//! rounds as implemented by `rand_chacha` 0.3. A generator is seeded from a
//! `u64` with `SeedableRng::seed_from_u64`, which expands the seed into the
//! 256-bit ChaCha key with PCG32. ChaCha is counter-based, so its output
//! depends only on key, stream id and word position, and is identical on every
//! platform.
//!
//! Independent sub-generators for batch work (one per instance) are derived
//! from a master seed by keeping the master key and selecting ChaCha stream
//! `index`; see [`instance_rng`].
//!
//! Uniform reals are drawn with `Rng::gen::<f64>()`, which takes the top 53
//! bits of a 64-bit output and scales by `2^-53`, giving values in `[0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{LendingGame, StrategyProfile};

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for instance `index` of a batch seeded with `master`.
pub fn instance_rng(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Uniform draw from the half-open interval `(lo, hi]`.
pub fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    lo + (hi - lo) * (1.0 - u)
}

/// Distribution of random lending games.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSampler {
    pub max_lenders: usize,
    pub max_borrowers: usize,
    /// Budgets are uniform on `(lo, hi]`.
    pub budget_range: (f64, f64),
    /// Demands are uniform on `(lo, hi]`.
    pub demand_range: (f64, f64),
    /// Both corridor ends are uniform on `(0, hi)`, then sorted.
    pub corridor_max: f64,
}

impl Default for GameSampler {
    fn default() -> Self {
        Self {
            max_lenders: 12,
            max_borrowers: 12,
            budget_range: (0.0, 100.0),
            demand_range: (0.0, 100.0),
            corridor_max: 0.2,
        }
    }
}

impl GameSampler {
    /// Games of moderate conditioning: budgets and demands in `(1, 100]`,
    /// corridor ends in `(0, 0.2)`.
    pub fn desk_scale(max_lenders: usize, max_borrowers: usize) -> Self {
        Self {
            max_lenders,
            max_borrowers,
            budget_range: (1.0, 100.0),
            demand_range: (1.0, 100.0),
            corridor_max: 0.2,
        }
    }

    /// Game with `1..=max_lenders` lenders and `1..=max_borrowers` borrowers.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LendingGame {
        let m = rng.gen_range(1..=self.max_lenders);
        let n = rng.gen_range(1..=self.max_borrowers);
        self.sample_shaped(rng, m, n)
    }

    pub fn sample_shaped<R: Rng + ?Sized>(&self, rng: &mut R, m: usize, n: usize) -> LendingGame {
        let (blo, bhi) = self.budget_range;
        let (dlo, dhi) = self.demand_range;
        let budgets = (0..m).map(|_| uniform_open_closed(rng, blo, bhi)).collect();
        let demands = (0..n).map(|_| uniform_open_closed(rng, dlo, dhi)).collect();
        let (rate_min, rate_max) = loop {
            let a = self.corridor_max * rng.gen::<f64>();
            let b = self.corridor_max * rng.gen::<f64>();
            if a > 0.0 && b > 0.0 && a != b {
                break (a.min(b), a.max(b));
            }
        };
        LendingGame::new(budgets, demands, rate_min, rate_max).expect("sampled parameters are valid")
    }
}

/// Random row inside lender `i`'s strategy set: a random fraction of the
/// budget split with random weights.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, game: &LendingGame, i: usize) -> Vec<f64> {
    let n = game.borrowers();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let spend = game.budgets()[i] * rng.gen::<f64>();
    weights.iter().map(|w| spend * w / total).collect()
}

pub fn random_feasible_profile<R: Rng + ?Sized>(rng: &mut R, game: &LendingGame) -> StrategyProfile {
    let rows: Vec<Vec<f64>> = (0..game.lenders()).map(|i| random_strategy(rng, game, i)).collect();
    StrategyProfile::from_rows(&rows).expect("random strategies are non-negative")
}
