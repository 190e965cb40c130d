//! Property suite behind `lendgame verify`.
//!
//! Every property reduces an instance to a non-negative violation; a property
//! passes when its worst violation over all instances is within tolerance.

use lendgame_core::best_response::best_response_gain;
use lendgame_core::dynamics::improvement_bound;
use lendgame_core::oracle::{
    concavity_gap, finite_difference_gradient, hessian_contraction, jacobian_quadratic_form,
};
use lendgame_core::sampling::{instance_rng, random_feasible_profile, random_strategy, GameSampler, SimRng};
use lendgame_core::{best_response, projected_gradient_solve, solve_equilibrium, LendingGame, StrategyProfile};
use ndarray::Array2;
use rand::Rng;

pub const ORACLE_TOL: f64 = 1e-11;
pub const ORACLE_MAX_ITERS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub tolerance: f64,
    pub worst: f64,
    pub instances: usize,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn first_failure(&self) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| !p.passed())
    }

    fn record(&mut self, name: &'static str, tolerance: f64, value: f64) {
        // NaN counts as a failure
        let value = if value.is_nan() { f64::INFINITY } else { value };
        match self.properties.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.worst = p.worst.max(value);
                p.instances += 1;
            }
            None => self.properties.push(PropertyResult {
                name,
                tolerance,
                worst: value,
                instances: 1,
            }),
        }
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:>9} {:>12} {:>12}  result\n", "property", "instances", "worst", "tolerance");
        for p in &self.properties {
            out.push_str(&format!(
                "{:<28} {:>9} {:>12.3e} {:>12.1e}  {}\n",
                p.name,
                p.instances,
                p.worst,
                p.tolerance,
                if p.passed() { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

fn random_direction(rng: &mut SimRng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0))
}

/// `v . grad Phi` at an arbitrary (possibly infeasible) point.
fn directional_slope(game: &LendingGame, s: &Array2<f64>, v: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for (j, col) in s.columns().into_iter().enumerate() {
        let d = game.demands()[j];
        let supply = col.sum();
        for (i, x) in col.iter().enumerate() {
            total += v[[i, j]] * game.spread() * (1.0 - (x + supply) / d);
        }
    }
    total
}

/// Runs every property on `game`, drawing random profiles from `rng`.
pub fn check_game(report: &mut VerifyReport, game: &LendingGame, rng: &mut SimRng) {
    let (m, n) = game.shape();
    let s = random_feasible_profile(rng, game);
    let t = random_feasible_profile(rng, game);

    let k = rng.gen_range(0..m);
    let dev = s.with_row(k, &random_strategy(rng, game, k)).expect("feasible row");
    let dphi = game.potential(&dev).unwrap() - game.potential(&s).unwrap();
    let du = game.utility(&dev, k).unwrap() - game.utility(&s, k).unwrap();
    report.record("potential_identity", 1e-10, (dphi - du).abs());
    report.record(
        "potential_forms",
        1e-10,
        (game.potential(&s).unwrap() - game.potential_telescoped(&s).unwrap()).abs(),
    );

    let lambda = rng.gen_range(0.01..0.99);
    let (measured, closed) = concavity_gap(game, &s, &t, lambda).unwrap();
    let violation = if closed > 0.0 { (measured - closed).abs() } else { f64::INFINITY };
    report.record("concavity_gap", 1e-12, violation);

    let fd = finite_difference_gradient(game, &s, 1e-5).unwrap();
    let g = game.potential_gradient(&s).unwrap();
    report.record("gradient_finite_difference", 1e-6, max_abs_diff(&fd, &g));

    let gt = game.potential_gradient(&t).unwrap();
    let variation = max_abs_diff(&g, &gt) - game.derived().a * s.l1_distance(&t);
    report.record("gradient_variation_bound", 1e-12, variation.max(0.0));

    let v = random_direction(rng, m, n);
    let q = jacobian_quadratic_form(game, &v).unwrap();
    let h = hessian_contraction(game, &v).unwrap();
    let violation = if q < 0.0 { (q - h).abs() / q.abs().max(1.0) } else { f64::INFINITY };
    report.record("jacobian_negative_definite", 1e-12, violation);

    // the slope along v keeps half its value inside the l1-ball of radius
    // v.grad / ((m + 1) a max|v|)
    let base = directional_slope(game, s.matrix(), &v);
    let mut shortfall: f64 = 0.0;
    if base > 0.0 {
        let vmax = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let radius = base / ((m + 1) as f64 * game.derived().a * vmax);
        for _ in 0..8 {
            let dir = random_direction(rng, m, n);
            let l1: f64 = dir.iter().map(|x| x.abs()).sum();
            let shifted = s.matrix() + &(dir * (radius * rng.gen::<f64>() / l1));
            shortfall = shortfall.max(0.5 * base - directional_slope(game, &shifted, &v));
        }
    }
    report.record("gradient_ball", 1e-10, shortfall.max(0.0));

    let eq = solve_equilibrium(game);
    let gap = game.potential(&eq.profile).unwrap() - game.potential(&s).unwrap();
    let best_gain = (0..m).map(|i| best_response_gain(game, &s, i).unwrap()).fold(0.0, f64::max);
    report.record("improvement_bound", 1e-12, (improvement_bound(game, gap) - best_gain).max(0.0));

    let oracle = projected_gradient_solve(game, ORACLE_TOL, ORACLE_MAX_ITERS);
    let distance = if oracle.converged {
        oracle.profile.max_abs_diff(&eq.profile)
    } else {
        f64::INFINITY
    };
    report.record("oracle_equivalence", 1e-6, distance);
    report.record("kkt_residual", 1e-10, eq.kkt(game, 1e-10).unwrap().max_residual());

    let rates = game.interest_rates(&eq.profile).unwrap();
    let spread = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - rates.iter().copied().fold(f64::INFINITY, f64::min);
    report.record("uniform_rates", 1e-12, spread);

    report.record("nash_at_equilibrium", 1e-9, max_gain(game, &eq.profile));
    let fixed = (0..m)
        .map(|i| {
            let br = best_response(game, &eq.profile, i).unwrap();
            br.iter()
                .zip(eq.profile.row(i))
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
        })
        .fold(0.0, f64::max);
    report.record("best_response_fixed_point", 1e-9, fixed);
}

/// Largest utility gain any lender obtains by switching to its best response.
pub fn max_gain(game: &LendingGame, profile: &StrategyProfile) -> f64 {
    (0..game.lenders())
        .map(|i| best_response_gain(game, profile, i).unwrap())
        .fold(0.0, f64::max)
}

/// Property suite over `count` random games. Instance `k` draws from
/// `instance_rng(seed, k)`.
pub fn verify_random(count: usize, max_m: usize, max_n: usize, seed: u64) -> VerifyReport {
    let sampler = GameSampler {
        max_lenders: max_m,
        max_borrowers: max_n,
        ..GameSampler::default()
    };
    let mut report = VerifyReport::default();
    for k in 0..count {
        let mut rng = instance_rng(seed, k as u64);
        let game = sampler.sample(&mut rng);
        check_game(&mut report, &game, &mut rng);
    }
    report
}

/// Property suite on one game, plus a Nash check of `profile` when given.
pub fn verify_scenario(game: &LendingGame, profile: Option<&StrategyProfile>, seed: u64) -> VerifyReport {
    let mut report = VerifyReport::default();
    let mut rng = instance_rng(seed, 0);
    check_game(&mut report, game, &mut rng);
    if let Some(p) = profile {
        report.record("nash_at_initial_profile", 1e-9, max_gain(game, p));
    }
    report
}
