//! Timing of the closed-form equilibrium solver.

use std::hint::black_box;
use std::time::{Duration, Instant};

use lendgame_core::sampling::{instance_rng, GameSampler};
use lendgame_core::solve_equilibrium;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub m: usize,
    pub n: usize,
    pub repeats: usize,
    pub mean: Duration,
    pub min: Duration,
}

/// Times `solve_equilibrium` on one random `m x n` game, `repeats` times.
pub fn time_solve(m: usize, n: usize, repeats: usize, seed: u64) -> Timing {
    assert!(m >= 1 && n >= 1 && repeats >= 1);
    let mut rng = instance_rng(seed, (m as u64) << 32 | n as u64);
    let game = GameSampler::desk_scale(m, n).sample_shaped(&mut rng, m, n);
    let mut total = Duration::ZERO;
    let mut min = Duration::MAX;
    for _ in 0..repeats {
        let start = Instant::now();
        black_box(solve_equilibrium(black_box(&game)));
        let elapsed = start.elapsed();
        total += elapsed;
        min = min.min(elapsed);
    }
    Timing {
        m,
        n,
        repeats,
        mean: total / repeats as u32,
        min,
    }
}

/// Least-squares slope of log(min runtime) against log(m) at fixed `n`.
pub fn scaling_slope(ms: &[usize], n: usize, repeats: usize, seed: u64) -> (f64, Vec<Timing>) {
    let timings: Vec<Timing> = ms.iter().map(|&m| time_solve(m, n, repeats, seed)).collect();
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = timings.iter().map(|t| t.min.as_secs_f64().ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (cov / var, timings)
}
