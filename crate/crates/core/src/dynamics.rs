//! Best-response style dynamics: eager and randomised asynchronous updates,
//! discretised pseudo-gradient ascent and continuous-time best response.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::best_response::{gain_with_totals, water_fill, ResidualDemand};
use crate::equilibrium::{solve_equilibrium, EquilibriumResult};
use crate::error::{GameError, Result};
use crate::game::{LendingGame, StrategyProfile};
use crate::projection::project_onto_budget;
use crate::sampling::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Eager,
    Randomised,
    #[serde(alias = "pseudo_gradient")]
    PseudoGradient,
    Continuous,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Eager => "eager",
            Variant::Randomised => "randomised",
            Variant::PseudoGradient => "pseudo-gradient",
            Variant::Continuous => "continuous",
        })
    }
}

impl FromStr for Variant {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eager" => Ok(Variant::Eager),
            "randomised" | "randomized" => Ok(Variant::Randomised),
            "pseudo-gradient" | "pseudo_gradient" => Ok(Variant::PseudoGradient),
            "continuous" => Ok(Variant::Continuous),
            other => Err(GameError::InvalidConfig(format!("unknown dynamics variant '{other}'"))),
        }
    }
}

/// Parameters of a dynamics run. Optional fields fall back to game-dependent
/// defaults: uniform lender weights, unit pseudo-gradient weights and half the
/// pseudo-gradient stability bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub variant: Variant,
    /// Blend fraction toward the best response, in `(0, 1]`.
    pub alpha: f64,
    /// Selection probabilities for the randomised variant.
    pub lender_weights: Option<Vec<f64>>,
    /// Per-lender scaling of the pseudo-gradient.
    pub pg_weights: Option<Vec<f64>>,
    pub pg_step: Option<f64>,
    /// RK4 step of the continuous variant.
    pub ode_step: f64,
    /// Integration horizon of the continuous variant.
    pub horizon: f64,
    pub max_iters: usize,
    /// Stop once the Lyapunov gap is at most this.
    pub stop_gap: f64,
    /// Continuous variant also stops once `max_i |BR_i(s) - s_i|_inf` is at most this.
    pub stop_residual: f64,
    pub seed: u64,
    /// Keep a full profile every this many records.
    pub snapshot_every: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Eager,
            alpha: 1.0,
            lender_weights: None,
            pg_weights: None,
            pg_step: None,
            ode_step: 0.01,
            horizon: 50.0,
            max_iters: 100_000,
            stop_gap: 1e-8,
            stop_residual: 1e-10,
            seed: 0,
            snapshot_every: 10,
        }
    }
}

impl DynamicsConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn lender_weights_for(&self, game: &LendingGame) -> Vec<f64> {
        self.lender_weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / game.lenders() as f64; game.lenders()])
    }

    pub fn pg_weights_for(&self, game: &LendingGame) -> Vec<f64> {
        self.pg_weights.clone().unwrap_or_else(|| vec![1.0; game.lenders()])
    }

    /// Configured step, or half the stability bound.
    pub fn pg_step_for(&self, game: &LendingGame) -> f64 {
        self.pg_step
            .unwrap_or_else(|| 0.5 * stability_bound(game, &self.pg_weights_for(game)))
    }

    pub fn validate(&self, game: &LendingGame) -> Result<()> {
        let bad = |msg: String| Err(GameError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.stop_gap > 0.0) {
            return bad(format!("stop_gap must be positive, got {}", self.stop_gap));
        }
        if !(self.stop_residual >= 0.0) {
            return bad(format!("stop_residual must be non-negative, got {}", self.stop_residual));
        }
        if !(self.ode_step > 0.0 && self.ode_step.is_finite()) {
            return bad(format!("ode_step must be positive, got {}", self.ode_step));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        check_selection_weights(game, &self.lender_weights_for(game))?;
        let pg_weights = self.pg_weights_for(game);
        check_pg_weights(game, &pg_weights)?;
        if let Some(step) = self.pg_step {
            check_pg_step(game, &pg_weights, step)?;
        }
        Ok(())
    }
}

fn check_selection_weights(game: &LendingGame, weights: &[f64]) -> Result<()> {
    if weights.len() != game.lenders() {
        return Err(GameError::LengthMismatch {
            expected: game.lenders(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(GameError::InvalidConfig("lender weights must all be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(GameError::InvalidConfig(format!("lender weights must sum to 1, got {total}")));
    }
    Ok(())
}

fn check_pg_weights(game: &LendingGame, weights: &[f64]) -> Result<()> {
    if weights.len() != game.lenders() {
        return Err(GameError::LengthMismatch {
            expected: game.lenders(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(GameError::InvalidConfig("pseudo-gradient weights must all be positive".into()));
    }
    Ok(())
}

fn check_pg_step(game: &LendingGame, weights: &[f64], step: f64) -> Result<()> {
    let bound = stability_bound(game, weights);
    if !(step > 0.0 && step <= bound) {
        return Err(GameError::UnstableStep { step, bound });
    }
    Ok(())
}

/// Largest admissible pseudo-gradient step,
/// `min_j d_j / (2 (rate_max - rate_min) (m + 1) max_i r_i)`.
///
/// The pseudo-gradient Jacobian is constant; per borrower it is
/// `-(spread / d_j) (I + 11^T)` scaled by the lender weights, with spectral
/// radius at most `spread (m + 1) max_i r_i / min_j d_j`.
pub fn stability_bound(game: &LendingGame, pg_weights: &[f64]) -> f64 {
    let d_min = game.demands().iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = pg_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    d_min / (2.0 * game.spread() * (game.lenders() + 1) as f64 * r_max)
}

/// `Phi(s*) - Phi(s)`, expanded around the equilibrium.
///
/// The potential is quadratic and its gradient at `s*` equals the budget
/// multiplier `mu_i` in every entry of row `i`, so
/// `Phi(s*) - Phi(s) = sum_i mu_i (c_i - sum_j s_ij)
///   + sum_j spread / (2 d_j) (sum_i D_ij^2 + (sum_i D_ij)^2)` with `D = s - s*`.
/// Unlike the plain difference this does not cancel catastrophically near `s*`.
pub fn lyapunov_gap(game: &LendingGame, equilibrium: &EquilibriumResult, profile: &StrategyProfile) -> f64 {
    let s = profile.matrix();
    let star = equilibrium.profile.matrix();
    let linear: f64 = equilibrium
        .multipliers_budget
        .iter()
        .enumerate()
        .filter(|(_, mu)| **mu != 0.0)
        .map(|(i, mu)| mu * (game.budgets()[i] - s.row(i).sum()))
        .sum();
    let quadratic: f64 = s
        .axis_iter(Axis(1))
        .zip(star.axis_iter(Axis(1)))
        .zip(game.demands())
        .map(|((col, col_star), &d)| {
            let (sq, total) = col
                .iter()
                .zip(col_star)
                .fold((0.0, 0.0), |(sq, t), (x, y)| (sq + (x - y) * (x - y), t + (x - y)));
            game.spread() / (2.0 * d) * (sq + total * total)
        })
        .sum();
    linear + quadratic
}

/// Minimum potential increase some lender's best response achieves at a
/// profile with the given Lyapunov gap: `gap^2 / (4 m^4 n^2 a (max_k c_k)^2)`.
pub fn improvement_bound(game: &LendingGame, gap: f64) -> f64 {
    let m = game.lenders() as f64;
    let n = game.borrowers() as f64;
    let c = game.max_budget();
    gap * gap / (4.0 * m.powi(4) * n * n * game.derived().a * c * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EagerStep {
    pub profile: StrategyProfile,
    pub lender: usize,
    /// Utility gain of the chosen lender's full best response.
    pub gain: f64,
}

fn blend_row(profile: &mut StrategyProfile, i: usize, target: &[f64], alpha: f64) {
    let row: Vec<f64> = profile
        .row(i)
        .iter()
        .zip(target)
        .map(|(&x, &b)| (x + alpha * (b - x)).max(0.0))
        .collect();
    profile.set_row(i, &row);
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GameError::InvalidConfig(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Moves the lender with the largest best-response gain (lowest index on
/// ties) a fraction `alpha` of the way to its best response.
pub fn step_eager(game: &LendingGame, profile: &StrategyProfile, alpha: f64) -> Result<EagerStep> {
    game.check_feasible(profile)?;
    check_alpha(alpha)?;
    Ok(eager_update(game, profile, alpha))
}

fn eager_update(game: &LendingGame, profile: &StrategyProfile, alpha: f64) -> EagerStep {
    let totals = profile.column_totals();
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for i in 0..game.lenders() {
        let (br, gain) = gain_with_totals(game, profile, &totals, i);
        if best.as_ref().is_none_or(|(_, _, g)| gain > *g) {
            best = Some((i, br, gain));
        }
    }
    let (lender, target, gain) = best.expect("at least one lender");
    let mut next = profile.clone();
    blend_row(&mut next, lender, &target, alpha);
    EagerStep {
        profile: next,
        lender,
        gain,
    }
}

/// Draws a lender from `weights` and moves it a fraction `alpha` of the way to
/// its best response.
pub fn step_randomised<R: Rng + ?Sized>(
    game: &LendingGame,
    profile: &StrategyProfile,
    alpha: f64,
    weights: &[f64],
    rng: &mut R,
) -> Result<(StrategyProfile, usize)> {
    game.check_feasible(profile)?;
    check_alpha(alpha)?;
    check_selection_weights(game, weights)?;
    Ok(randomised_update(game, profile, alpha, weights, rng))
}

fn draw_lender<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return i;
        }
    }
    weights.len() - 1
}

fn randomised_update<R: Rng + ?Sized>(
    game: &LendingGame,
    profile: &StrategyProfile,
    alpha: f64,
    weights: &[f64],
    rng: &mut R,
) -> (StrategyProfile, usize) {
    let lender = draw_lender(weights, rng);
    let others = ResidualDemand::for_lender(profile, lender);
    let target = water_fill(game.demands(), &others, game.budgets()[lender]).strategy;
    let mut next = profile.clone();
    blend_row(&mut next, lender, &target, alpha);
    (next, lender)
}

/// Weighted pseudo-gradient: row `i` is `r_i` times lender `i`'s utility
/// gradient in its own strategy.
pub fn pseudo_gradient(game: &LendingGame, profile: &StrategyProfile, pg_weights: &[f64]) -> Result<Array2<f64>> {
    game.check_shape(profile)?;
    check_pg_weights(game, pg_weights)?;
    let mut g = game.gradient_unchecked(profile.matrix());
    for (mut row, &r) in g.outer_iter_mut().zip(pg_weights) {
        row.mapv_inplace(|x| r * x);
    }
    Ok(g)
}

/// One synchronous projected step: every lender moves along its weighted
/// utility gradient and is projected back onto its strategy set.
pub fn step_pseudo_gradient(
    game: &LendingGame,
    profile: &StrategyProfile,
    pg_weights: &[f64],
    pg_step: f64,
) -> Result<StrategyProfile> {
    game.check_feasible(profile)?;
    check_pg_weights(game, pg_weights)?;
    check_pg_step(game, pg_weights, pg_step)?;
    Ok(pseudo_gradient_update(game, profile, pg_weights, pg_step))
}

fn pseudo_gradient_update(
    game: &LendingGame,
    profile: &StrategyProfile,
    pg_weights: &[f64],
    pg_step: f64,
) -> StrategyProfile {
    let g = game.gradient_unchecked(profile.matrix());
    project_rows(game, profile.matrix() + &(g * &ndarray::Array1::from(pg_weights.to_vec()).insert_axis(Axis(1)) * pg_step))
}

pub(crate) fn project_rows(game: &LendingGame, mut s: Array2<f64>) -> StrategyProfile {
    for (mut row, &c) in s.outer_iter_mut().zip(game.budgets()) {
        let projected = project_onto_budget(row.as_slice().expect("standard layout"), c);
        row.assign(&ndarray::ArrayView1::from(&projected[..]));
    }
    StrategyProfile::from_array_unchecked(s)
}

/// `BR(s) - s` for every lender simultaneously.
fn best_response_field(game: &LendingGame, s: &Array2<f64>) -> Array2<f64> {
    let totals = s.sum_axis(Axis(0));
    let mut field = Array2::zeros(s.raw_dim());
    for (i, mut out) in field.outer_iter_mut().enumerate() {
        let others = ResidualDemand(
            totals
                .iter()
                .zip(s.row(i))
                .map(|(t, x)| (t - x).max(0.0))
                .collect(),
        );
        let br = water_fill(game.demands(), &others, game.budgets()[i]).strategy;
        for ((o, b), x) in out.iter_mut().zip(&br).zip(s.row(i)) {
            *o = b - x;
        }
    }
    field
}

/// `max_i |BR_i(s) - s_i|_inf`; zero exactly at the equilibrium.
pub fn best_response_residual(game: &LendingGame, profile: &StrategyProfile) -> Result<f64> {
    game.check_shape(profile)?;
    Ok(best_response_field(game, profile.matrix())
        .iter()
        .fold(0.0, |m, x| m.max(x.abs())))
}

fn rk4_step(game: &LendingGame, s: &Array2<f64>, h: f64) -> StrategyProfile {
    let k1 = best_response_field(game, s);
    let k2 = best_response_field(game, &(s + &(&k1 * (h / 2.0))));
    let k3 = best_response_field(game, &(s + &(&k2 * (h / 2.0))));
    let k4 = best_response_field(game, &(s + &(&k3 * h)));
    let next = s + &((k1 + &(k2 * 2.0) + &(k3 * 2.0) + &k4) * (h / 6.0));
    // RK4 stages are not convex combinations; snap O(h^2) excursions back.
    project_rows(game, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    /// Iteration count for the asynchronous variants, `step * pg_step` for
    /// pseudo-gradient, integration time for the continuous variant.
    pub time: f64,
    pub lender: Option<usize>,
    pub potential: f64,
    pub lyapunov_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub profile: StrategyProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    StepError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub variant: Variant,
    pub records: Vec<TrajectoryRecord>,
    /// Full profiles at every `snapshot_every`-th record, plus the final one.
    pub snapshots: Vec<Snapshot>,
    pub status: Termination,
    pub final_profile: StrategyProfile,
    pub equilibrium_potential: f64,
}

impl Trajectory {
    pub fn final_gap(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.lyapunov_gap)
    }

    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.step)
    }

    pub fn converged(&self) -> bool {
        self.status == Termination::Converged
    }
}

struct Recorder<'a> {
    game: &'a LendingGame,
    equilibrium: EquilibriumResult,
    equilibrium_potential: f64,
    snapshot_every: usize,
    records: Vec<TrajectoryRecord>,
    snapshots: Vec<Snapshot>,
}

impl<'a> Recorder<'a> {
    fn new(game: &'a LendingGame, snapshot_every: usize) -> Self {
        let equilibrium = solve_equilibrium(game);
        let equilibrium_potential = game.potential_unchecked(equilibrium.profile.matrix());
        Self {
            game,
            equilibrium,
            equilibrium_potential,
            snapshot_every,
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    fn push(&mut self, step: usize, time: f64, lender: Option<usize>, profile: &StrategyProfile) -> f64 {
        let gap = lyapunov_gap(self.game, &self.equilibrium, profile);
        if self.records.len().is_multiple_of(self.snapshot_every) {
            self.snapshots.push(Snapshot {
                step,
                profile: profile.clone(),
            });
        }
        self.records.push(TrajectoryRecord {
            step,
            time,
            lender,
            potential: self.game.potential_unchecked(profile.matrix()),
            lyapunov_gap: gap,
        });
        gap
    }

    fn finish(mut self, variant: Variant, status: Termination, final_profile: StrategyProfile) -> Trajectory {
        if let Some(last) = self.records.last() {
            if self.snapshots.last().is_none_or(|s| s.step != last.step) {
                self.snapshots.push(Snapshot {
                    step: last.step,
                    profile: final_profile.clone(),
                });
            }
        }
        Trajectory {
            variant,
            records: self.records,
            snapshots: self.snapshots,
            status,
            final_profile,
            equilibrium_potential: self.equilibrium_potential,
        }
    }
}

/// Outcome of one update inside the driver loop.
struct Update {
    profile: StrategyProfile,
    lender: Option<usize>,
    time: f64,
}

/// Runs `update` until `done` holds, the update function signals the end of
/// its horizon by returning `None`, or `max_iters` updates have been made.
fn drive(
    mut recorder: Recorder<'_>,
    variant: Variant,
    initial: &StrategyProfile,
    max_iters: usize,
    mut done: impl FnMut(&StrategyProfile, f64) -> bool,
    mut update: impl FnMut(&StrategyProfile) -> Option<Update>,
) -> Trajectory {
    let game = recorder.game;
    let mut current = initial.clone();
    let gap = recorder.push(0, 0.0, None, &current);
    if done(&current, gap) {
        return recorder.finish(variant, Termination::Converged, current);
    }
    for step in 1..=max_iters {
        let Some(next) = update(&current) else {
            return recorder.finish(variant, Termination::IterationCap, current);
        };
        if let Err(e) = game.check_feasible(&next.profile) {
            recorder.push(step, next.time, next.lender, &next.profile);
            return recorder.finish(variant, Termination::StepError(e.to_string()), next.profile);
        }
        current = next.profile;
        let gap = recorder.push(step, next.time, next.lender, &current);
        if done(&current, gap) {
            return recorder.finish(variant, Termination::Converged, current);
        }
    }
    recorder.finish(variant, Termination::IterationCap, current)
}

/// Integrates `ds_i/dt = BR_i(s) - s_i` with fixed-step classical RK4 up to
/// `horizon`, stopping early once the best-response residual is at most
/// `stop_residual`.
pub fn integrate_continuous(
    game: &LendingGame,
    initial: &StrategyProfile,
    ode_step: f64,
    horizon: f64,
    stop_residual: f64,
) -> Result<Trajectory> {
    let config = DynamicsConfig {
        variant: Variant::Continuous,
        ode_step,
        horizon,
        stop_residual,
        stop_gap: f64::MIN_POSITIVE,
        max_iters: usize::MAX,
        ..DynamicsConfig::default()
    };
    run(game, initial, &config)
}

fn continuous(game: &LendingGame, initial: &StrategyProfile, config: &DynamicsConfig) -> Trajectory {
    let h = config.ode_step;
    let horizon = config.horizon;
    let ratio = horizon / h;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut k = 0usize;
    let done = |s: &StrategyProfile, gap: f64| {
        gap <= config.stop_gap
            || best_response_field(game, s.matrix())
                .iter()
                .all(|x| x.abs() <= config.stop_residual)
    };
    let update = |s: &StrategyProfile| {
        if k >= steps {
            return None;
        }
        let t = k as f64 * h;
        let dt = if k + 1 == steps { horizon - t } else { h };
        k += 1;
        Some(Update {
            profile: rk4_step(game, s.matrix(), dt),
            lender: None,
            time: if k == steps { horizon } else { k as f64 * h },
        })
    };
    drive(
        Recorder::new(game, config.snapshot_every),
        Variant::Continuous,
        initial,
        config.max_iters,
        done,
        update,
    )
}

/// Runs the configured dynamics from `initial`.
///
/// Reaching `max_iters` (or the horizon of the continuous variant) without
/// the gap falling to `stop_gap` is reported as [`Termination::IterationCap`].
pub fn run(game: &LendingGame, initial: &StrategyProfile, config: &DynamicsConfig) -> Result<Trajectory> {
    config.validate(game)?;
    game.check_feasible(initial)?;
    let recorder = Recorder::new(game, config.snapshot_every);
    let stop_gap = config.stop_gap;
    let converged = |_: &StrategyProfile, gap: f64| gap <= stop_gap;
    let trajectory = match config.variant {
        Variant::Eager => {
            let mut t = 0usize;
            drive(recorder, config.variant, initial, config.max_iters, converged, |s| {
                t += 1;
                let step = eager_update(game, s, config.alpha);
                Some(Update {
                    profile: step.profile,
                    lender: Some(step.lender),
                    time: t as f64,
                })
            })
        }
        Variant::Randomised => {
            let weights = config.lender_weights_for(game);
            let mut rng = seeded_rng(config.seed);
            let mut t = 0usize;
            drive(recorder, config.variant, initial, config.max_iters, converged, |s| {
                t += 1;
                let (profile, lender) = randomised_update(game, s, config.alpha, &weights, &mut rng);
                Some(Update {
                    profile,
                    lender: Some(lender),
                    time: t as f64,
                })
            })
        }
        Variant::PseudoGradient => {
            let weights = config.pg_weights_for(game);
            let step = config.pg_step_for(game);
            let mut t = 0usize;
            drive(recorder, config.variant, initial, config.max_iters, converged, |s| {
                t += 1;
                Some(Update {
                    profile: pseudo_gradient_update(game, s, &weights, step),
                    lender: None,
                    time: t as f64 * step,
                })
            })
        }
        Variant::Continuous => continuous(game, initial, config),
    };
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::best_response::best_response_gain;
    use ndarray::array;

    fn two_lender_game() -> LendingGame {
        LendingGame::new(vec![1.0, 10.0], vec![6.0], 0.02, 0.08).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [Variant::Eager, Variant::Randomised, Variant::PseudoGradient, Variant::Continuous] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("fictitious".parse::<Variant>().is_err());
    }

    #[test]
    fn gap_expansion_matches_direct_difference() {
        let game = LendingGame::new(vec![1.0, 4.0, 9.0], vec![3.0, 8.0], 0.01, 0.09).unwrap();
        let eq = solve_equilibrium(&game);
        let s = StrategyProfile::new(array![[0.5, 0.2], [1.0, 2.0], [0.0, 3.0]]).unwrap();
        let direct = game.potential(&eq.profile).unwrap() - game.potential(&s).unwrap();
        assert!((lyapunov_gap(&game, &eq, &s) - direct).abs() < 1e-13);
        assert!(lyapunov_gap(&game, &eq, &eq.profile).abs() < 1e-15);
    }

    #[test]
    fn eager_first_step_picks_larger_gain() {
        let game = two_lender_game();
        let zero = StrategyProfile::zeros_for(&game);
        let step = step_eager(&game, &zero, 1.0).unwrap();
        assert_eq!(step.lender, 1);
        assert!((step.gain - 0.09).abs() < 1e-15);
        assert_eq!(step.profile.rows(), vec![vec![0.0], vec![3.0]]);
    }

    #[test]
    fn eager_ties_go_to_lowest_index() {
        let game = LendingGame::new(vec![5.0, 5.0], vec![4.0], 0.02, 0.08).unwrap();
        let step = step_eager(&game, &StrategyProfile::zeros_for(&game), 0.5).unwrap();
        assert_eq!(step.lender, 0);
        assert!((step.profile.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed_for_every_variant() {
        let game = two_lender_game();
        let eq = solve_equilibrium(&game);
        let step = step_eager(&game, &eq.profile, 0.3).unwrap();
        assert!(step.gain < 1e-12);
        assert!(step.profile.max_abs_diff(&eq.profile) < 1e-12);

        let mut rng = seeded_rng(9);
        let (next, _) = step_randomised(&game, &eq.profile, 0.7, &[0.5, 0.5], &mut rng).unwrap();
        assert!(next.max_abs_diff(&eq.profile) < 1e-12);

        let w = [1.0, 1.0];
        let next = step_pseudo_gradient(&game, &eq.profile, &w, 0.5 * stability_bound(&game, &w)).unwrap();
        assert!(next.max_abs_diff(&eq.profile) < 1e-10);
    }

    #[test]
    fn single_lender_reaches_equilibrium_in_one_step() {
        let game = LendingGame::new(vec![7.0], vec![10.0, 4.0], 0.01, 0.05).unwrap();
        let start = StrategyProfile::new(array![[3.0, 3.0]]).unwrap();
        let step = step_eager(&game, &start, 1.0).unwrap();
        let eq = solve_equilibrium(&game);
        assert!(step.profile.max_abs_diff(&eq.profile) < 1e-12);
    }

    #[test]
    fn point_mass_weights_always_pick_that_lender() {
        let game = LendingGame::new(vec![3.0, 4.0, 5.0], vec![6.0], 0.02, 0.08).unwrap();
        let mut rng = seeded_rng(1);
        let mut s = StrategyProfile::zeros_for(&game);
        for _ in 0..20 {
            let (next, lender) = step_randomised(&game, &s, 0.5, &[1e-300, 1.0 - 2e-300, 1e-300], &mut rng).unwrap();
            assert_eq!(lender, 1);
            s = next;
        }
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let game = two_lender_game();
        let zero = StrategyProfile::zeros_for(&game);
        let mut rng = seeded_rng(0);
        assert!(step_randomised(&game, &zero, 0.5, &[0.3, 0.3], &mut rng).is_err());
        assert!(step_randomised(&game, &zero, 0.5, &[1.0], &mut rng).is_err());
        assert!(step_eager(&game, &zero, 0.0).is_err());
        assert!(step_eager(&game, &zero, 1.5).is_err());
    }

    #[test]
    fn pseudo_gradient_from_zero_adds_spread_times_step() {
        let game = LendingGame::new(vec![10.0, 10.0], vec![4.0, 5.0], 0.02, 0.08).unwrap();
        let w = [1.0, 1.0];
        let step = 0.5 * stability_bound(&game, &w);
        let next = step_pseudo_gradient(&game, &StrategyProfile::zeros_for(&game), &w, step).unwrap();
        // budgets are large enough that the projection is inactive
        assert!(next.matrix().iter().all(|&x| (x - step * 0.06).abs() < 1e-15));
    }

    #[test]
    fn unstable_step_is_rejected() {
        let game = two_lender_game();
        let w = [1.0, 1.0];
        let bound = stability_bound(&game, &w);
        assert!((bound - 6.0 / (2.0 * 0.06 * 3.0)).abs() < 1e-12);
        assert!(matches!(
            step_pseudo_gradient(&game, &StrategyProfile::zeros_for(&game), &w, bound * 1.01),
            Err(GameError::UnstableStep { .. })
        ));
        let config = DynamicsConfig {
            variant: Variant::PseudoGradient,
            pg_step: Some(bound * 2.0),
            ..DynamicsConfig::default()
        };
        assert!(matches!(config.validate(&game), Err(GameError::UnstableStep { .. })));
    }

    #[test]
    fn continuous_single_lender_matches_exponential() {
        let game = LendingGame::new(vec![100.0], vec![10.0], 0.02, 0.08).unwrap();
        let traj = integrate_continuous(&game, &StrategyProfile::zeros_for(&game), 0.01, 1.0, 0.0).unwrap();
        let last = traj.records.last().unwrap();
        assert!((last.time - 1.0).abs() < 1e-15);
        let expected = 5.0 * (1.0 - (-1.0f64).exp());
        assert!((traj.final_profile.get(0, 0) - expected).abs() < 1e-5);
        assert!((traj.final_profile.get(0, 0) - 3.16060).abs() < 1e-5);
    }

    #[test]
    fn continuous_from_equilibrium_stays_put() {
        let game = two_lender_game();
        let eq = solve_equilibrium(&game);
        let traj = integrate_continuous(&game, &eq.profile, 0.01, 1.0, 0.0).unwrap();
        for snap in &traj.snapshots {
            assert!(snap.profile.max_abs_diff(&eq.profile) < 1e-12);
        }
    }

    #[test]
    fn run_reports_iteration_cap() {
        let game = LendingGame::new(vec![3.0, 4.0, 5.0], vec![6.0, 2.0], 0.02, 0.08).unwrap();
        let config = DynamicsConfig {
            variant: Variant::Eager,
            alpha: 0.1,
            max_iters: 3,
            ..DynamicsConfig::default()
        };
        let traj = run(&game, &StrategyProfile::zeros_for(&game), &config).unwrap();
        assert_eq!(traj.status, Termination::IterationCap);
        assert_eq!(traj.records.len(), 4);
        assert_eq!(traj.iterations(), 3);
    }

    #[test]
    fn run_rejects_infeasible_start() {
        let game = two_lender_game();
        let start = StrategyProfile::new(array![[5.0], [0.0]]).unwrap();
        assert!(matches!(
            run(&game, &start, &DynamicsConfig::default()),
            Err(GameError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn snapshots_are_thinned() {
        let game = LendingGame::new(vec![3.0, 4.0, 5.0], vec![6.0, 2.0], 0.02, 0.08).unwrap();
        let config = DynamicsConfig {
            variant: Variant::Randomised,
            alpha: 0.2,
            max_iters: 25,
            stop_gap: 1e-300,
            snapshot_every: 10,
            ..DynamicsConfig::default()
        };
        let traj = run(&game, &StrategyProfile::zeros_for(&game), &config).unwrap();
        let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 25]);
    }

    #[test]
    fn improvement_bound_holds_on_small_game() {
        let game = two_lender_game();
        let eq = solve_equilibrium(&game);
        let zero = StrategyProfile::zeros_for(&game);
        let gap = lyapunov_gap(&game, &eq, &zero);
        let best = (0..2).map(|i| best_response_gain(&game, &zero, i).unwrap()).fold(0.0, f64::max);
        assert!(best >= improvement_bound(&game, gap));
    }
}
