//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lendgame_cli::bench::{scaling_slope, time_solve};
use lendgame_core::dynamics::improvement_bound;
use lendgame_core::oracle::{concavity_gap, hessian_contraction, jacobian_quadratic_form};
use lendgame_core::sampling::{instance_rng, random_feasible_profile, random_strategy, seeded_rng, GameSampler};
use lendgame_core::{
    integrate_continuous, projected_gradient_solve, run, solve_equilibrium, DynamicsConfig, LendingGame,
    StrategyProfile, Variant,
};
use ndarray::Array2;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn zero(game: &LendingGame) -> StrategyProfile {
    StrategyProfile::zeros_for(game)
}

fn closed_form_instances() -> Outcome {
    let cases = [
        (vec![100.0], vec![10.0], 0.02, 0.08, vec![vec![5.0]], 0.05),
        (vec![1.0, 10.0], vec![6.0], 0.02, 0.08, vec![vec![1.0], vec![2.5]], 0.045),
    ];
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (c, d, lo, hi, expected, rate) in cases {
        let game = LendingGame::new(c, d, lo, hi).unwrap();
        let start = Instant::now();
        let eq = solve_equilibrium(&game);
        slowest = slowest.max(start.elapsed());
        let want = StrategyProfile::from_rows(&expected).unwrap();
        worst = worst.max(eq.profile.max_abs_diff(&want)).max((eq.market_rate - rate).abs());
    }
    outcome(
        worst <= 1e-12 && slowest < Duration::from_millis(1),
        format!("max error {worst:.1e}, slowest solve {slowest:?}"),
    )
}

struct RandomEquilibria {
    distance: f64,
    kkt: f64,
    rate_spread: f64,
    all_converged: bool,
    elapsed: Duration,
}

fn random_equilibria() -> RandomEquilibria {
    let sampler = GameSampler::default();
    let start = Instant::now();
    let mut out = RandomEquilibria {
        distance: 0.0,
        kkt: 0.0,
        rate_spread: 0.0,
        all_converged: true,
        elapsed: Duration::ZERO,
    };
    for k in 0..200 {
        let mut rng = instance_rng(2024, k);
        let game = sampler.sample(&mut rng);
        let eq = solve_equilibrium(&game);
        let oracle = projected_gradient_solve(&game, 1e-11, 2_000_000);
        out.all_converged &= oracle.converged;
        out.distance = out.distance.max(oracle.profile.max_abs_diff(&eq.profile));
        out.kkt = out.kkt.max(eq.kkt(&game, 1e-10).unwrap().max_residual());
        let rates = game.interest_rates(&eq.profile).unwrap();
        let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        out.rate_spread = out.rate_spread.max(hi - lo);
    }
    out.elapsed = start.elapsed();
    out
}

fn potential_identity() -> Outcome {
    let sampler = GameSampler::default();
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let mut rng = instance_rng(4, k);
        let game = sampler.sample(&mut rng);
        let s = random_feasible_profile(&mut rng, &game);
        let i = rng.gen_range(0..game.lenders());
        let dev = s.with_row(i, &random_strategy(&mut rng, &game, i)).unwrap();
        let dphi = game.potential(&dev).unwrap() - game.potential(&s).unwrap();
        let du = game.utility(&dev, i).unwrap() - game.utility(&s, i).unwrap();
        worst = worst.max((dphi - du).abs());
    }
    outcome(worst <= 1e-10, format!("1000 triples, max |dPhi - du| {worst:.1e}"))
}

fn concavity_gaps() -> Outcome {
    let sampler = GameSampler::default();
    let mut worst: f64 = 0.0;
    let mut all_positive = true;
    for k in 0..1000 {
        let mut rng = instance_rng(5, k);
        let game = sampler.sample(&mut rng);
        let s = random_feasible_profile(&mut rng, &game);
        let t = random_feasible_profile(&mut rng, &game);
        let lambda = rng.gen_range(0.01..0.99);
        let (measured, closed) = concavity_gap(&game, &s, &t, lambda).unwrap();
        worst = worst.max((measured - closed).abs());
        all_positive &= closed > 0.0 && measured > 0.0;
    }
    outcome(
        worst <= 1e-12 && all_positive,
        format!("1000 triples, max |measured - closed| {worst:.1e}, all positive {all_positive}"),
    )
}

fn negative_definite() -> Outcome {
    let sampler = GameSampler::default();
    let mut worst: f64 = 0.0;
    let mut all_negative = true;
    for k in 0..1000 {
        let mut rng = instance_rng(6, k);
        let game = sampler.sample(&mut rng);
        let (m, n) = game.shape();
        let v = loop {
            let v = Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0));
            if v.iter().any(|x| *x != 0.0) {
                break v;
            }
        };
        let q = jacobian_quadratic_form(&game, &v).unwrap();
        let h = hessian_contraction(&game, &v).unwrap();
        all_negative &= q < 0.0 && h < 0.0;
        worst = worst.max((q - h).abs() / q.abs().max(1.0));
    }
    outcome(
        worst <= 1e-12 && all_negative,
        format!("1000 vectors, max relative mismatch {worst:.1e}, all negative {all_negative}"),
    )
}

fn desk_game(seed: u64, m: usize, n: usize) -> LendingGame {
    GameSampler::desk_scale(m, n).sample_shaped(&mut seeded_rng(seed), m, n)
}

struct EagerRuns {
    converged: usize,
    runs: usize,
    worst_drop: f64,
    worst_bound_shortfall: f64,
    max_iterations: usize,
}

fn eager_runs() -> EagerRuns {
    let mut out = EagerRuns {
        converged: 0,
        runs: 0,
        worst_drop: 0.0,
        worst_bound_shortfall: 0.0,
        max_iterations: 0,
    };
    for seed in 0..50 {
        let game = desk_game(seed, 5, 4);
        for alpha in [0.25, 0.5, 1.0] {
            let config = DynamicsConfig {
                variant: Variant::Eager,
                alpha,
                stop_gap: 1e-8,
                max_iters: 100_000,
                ..DynamicsConfig::default()
            };
            let traj = run(&game, &zero(&game), &config).unwrap();
            out.runs += 1;
            if traj.converged() {
                out.converged += 1;
            }
            out.max_iterations = out.max_iterations.max(traj.iterations());
            for w in traj.records.windows(2) {
                let gain = w[1].potential - w[0].potential;
                out.worst_drop = out.worst_drop.max(-gain);
                let bound = alpha * improvement_bound(&game, w[0].lyapunov_gap);
                out.worst_bound_shortfall = out.worst_bound_shortfall.max(bound - gain);
            }
        }
    }
    out
}

fn randomised_runs() -> Outcome {
    let game = desk_game(8, 4, 4);
    let eq = solve_equilibrium(&game);
    let mut reached = 0;
    let mut worst_distance: f64 = 0.0;
    for seed in 0..20 {
        let config = DynamicsConfig {
            variant: Variant::Randomised,
            alpha: 1.0,
            seed,
            stop_gap: 1e-16,
            max_iters: 100_000,
            ..DynamicsConfig::default()
        };
        let traj = run(&game, &zero(&game), &config).unwrap();
        if traj.records.iter().any(|r| r.lyapunov_gap <= 1e-6) {
            reached += 1;
        }
        worst_distance = worst_distance.max(traj.final_profile.max_abs_diff(&eq.profile));
    }
    outcome(
        reached == 20 && worst_distance <= 1e-6,
        format!("{reached}/20 seeds reached gap 1e-6, max terminal distance to equilibrium {worst_distance:.1e}"),
    )
}

fn pseudo_gradient_runs() -> Outcome {
    let mut converged = 0;
    let mut max_iterations = 0;
    for seed in 0..50 {
        let game = desk_game(100 + seed, 4, 4);
        let config = DynamicsConfig {
            variant: Variant::PseudoGradient,
            stop_gap: 1e-6,
            max_iters: 100_000,
            ..DynamicsConfig::default()
        };
        let traj = run(&game, &zero(&game), &config).unwrap();
        if traj.converged() {
            converged += 1;
        }
        max_iterations = max_iterations.max(traj.iterations());
    }
    outcome(
        converged == 50,
        format!("{converged}/50 games reached gap 1e-6, most iterations {max_iterations}"),
    )
}

fn continuous_runs() -> Outcome {
    let single = LendingGame::new(vec![100.0], vec![10.0], 0.02, 0.08).unwrap();
    let mut exp_error: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let traj = integrate_continuous(&single, &zero(&single), 0.01, t, 0.0).unwrap();
        let exact = 5.0 * (1.0 - f64::exp(-t));
        exp_error = exp_error.max((traj.final_profile.get(0, 0) - exact).abs());
    }

    let mut monotone = true;
    let mut reached = 0;
    for seed in 0..50 {
        let game = desk_game(200 + seed, 3, 3);
        let config = DynamicsConfig {
            variant: Variant::Continuous,
            ode_step: 0.01,
            horizon: 50.0,
            stop_gap: 1e-6,
            ..DynamicsConfig::default()
        };
        let traj = run(&game, &zero(&game), &config).unwrap();
        monotone &= traj
            .records
            .windows(2)
            .all(|w| w[1].lyapunov_gap <= w[0].lyapunov_gap + 1e-8 * config.ode_step);
        if traj.final_gap() <= 1e-6 {
            reached += 1;
        }
    }
    outcome(
        exp_error <= 1e-5 && monotone && reached == 50,
        format!("exponential case error {exp_error:.1e}, gap monotone {monotone}, {reached}/50 games reached 1e-6"),
    )
}

fn complexity() -> Outcome {
    let big = time_solve(2000, 2000, 3, 1);
    let (slope, timings) = scaling_slope(&[500, 1000, 2000, 4000], 1000, 5, 1);
    let mins: Vec<String> = timings.iter().map(|t| format!("{:.2}ms", t.min.as_secs_f64() * 1e3)).collect();
    outcome(
        big.min < Duration::from_secs(1) && slope < 1.5,
        format!(
            "2000x2000 solve {:.1} ms, log-log slope in m {slope:.2} (n=1000: {})",
            big.min.as_secs_f64() * 1e3,
            mins.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, o: Outcome| {
        println!("[{}] {id:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failures += 1;
        }
    };

    report(1, "closed-form equilibria", closed_form_instances());

    let eq = random_equilibria();
    report(
        2,
        "oracle equivalence",
        outcome(
            eq.all_converged && eq.distance <= 1e-6 && eq.kkt <= 1e-10 && eq.elapsed < Duration::from_secs(60),
            format!(
                "200 games, max distance {:.1e}, max kkt residual {:.1e}, oracle converged {}, {:.1} s",
                eq.distance,
                eq.kkt,
                eq.all_converged,
                eq.elapsed.as_secs_f64()
            ),
        ),
    );
    report(
        3,
        "uniform market rate",
        outcome(eq.rate_spread <= 1e-12, format!("max rate spread {:.1e}", eq.rate_spread)),
    );

    report(4, "potential identity", potential_identity());
    report(5, "concavity gap", concavity_gaps());
    report(6, "negative definite jacobian", negative_definite());

    let eager = eager_runs();
    report(
        7,
        "eager dynamics",
        outcome(
            eager.converged == eager.runs && eager.worst_drop <= 1e-12,
            format!(
                "{}/{} runs reached gap 1e-8 (most iterations {}), largest potential drop {:.1e}",
                eager.converged, eager.runs, eager.max_iterations, eager.worst_drop
            ),
        ),
    );
    report(8, "randomised dynamics", randomised_runs());
    report(
        9,
        "improvement bound",
        outcome(
            eager.worst_bound_shortfall <= 1e-12,
            format!("largest shortfall below bound {:.1e}", eager.worst_bound_shortfall),
        ),
    );
    report(10, "pseudo-gradient dynamics", pseudo_gradient_runs());
    report(11, "continuous dynamics", continuous_runs());
    report(12, "solver complexity", complexity());

    if failures == 0 {
        println!("acceptance: all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
