//! Closed-form pure Nash equilibrium, its KKT multipliers and a KKT
//! certificate for arbitrary profile/multiplier pairs.
//!
//! Lenders are sorted by budget. The `m̄` smallest-budget lenders (the
//! exhausted set) lend their whole budget in proportion to demand; every other
//! lender lends the same demand-proportional amount, an equal share of what
//! the exhausted lenders leave unserved. All borrowers then pay the same
//! market rate.

use ndarray::Array2;

use crate::error::{GameError, Result};
use crate::game::{LendingGame, StrategyProfile};

/// Default tolerance for [`kkt_check`].
pub const DEFAULT_KKT_TOL: f64 = 1e-8;

/// Threshold index together with the budget ordering it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// Number of lenders that exhaust their budget at equilibrium.
    pub index: usize,
    /// Lender indices sorted by non-decreasing budget, ties by original index.
    pub order: Vec<usize>,
}

impl Threshold {
    /// Original indices of the exhausted lenders.
    pub fn exhausted(&self) -> &[usize] {
        &self.order[..self.index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub threshold_index: usize,
    /// Exhausted lenders in original indexing, in budget order.
    pub exhausted_set: Vec<usize>,
    /// Budget-constraint multipliers, one per lender.
    pub multipliers_budget: Vec<f64>,
    /// Non-negativity multipliers; identically zero at the equilibrium.
    pub multipliers_nonneg: Array2<f64>,
    pub market_rate: f64,
}

/// Finds the least `k` in `0..=m` with `c_(k+1) > (sum(d) - sum_{l<=k} c_(l)) / (m - k + 1)`
/// over budgets in sorted order, using `c_(m+1) = +inf`.
///
/// The right-hand side is carried as a running value `R`, updated as
/// `R <- (R (m - k + 1) - c_(k+1)) / (m - k)` whenever lender `k+1` joins the
/// exhausted set. The comparison is exact: equality puts the lender in the set.
pub fn compute_threshold_index(game: &LendingGame) -> Threshold {
    let m = game.lenders();
    let budgets = game.budgets();
    let mut order: Vec<usize> = (0..m).collect();
    // stable: equal budgets keep original index order
    order.sort_by(|&a, &b| budgets[a].total_cmp(&budgets[b]));

    let mut running = game.sum_demand() / (m + 1) as f64;
    let mut k = 0;
    while k < m && budgets[order[k]] <= running {
        running = (running * (m - k + 1) as f64 - budgets[order[k]]) / (m - k) as f64;
        k += 1;
    }
    Threshold { index: k, order }
}

struct ClosedForm {
    threshold: Threshold,
    sum_demand: f64,
    exhausted_budget: f64,
    /// Fraction of each borrower's demand lent by every non-exhausted lender.
    share: f64,
}

impl ClosedForm {
    fn new(game: &LendingGame) -> Self {
        let threshold = compute_threshold_index(game);
        let sum_demand = game.sum_demand();
        let exhausted_budget: f64 = threshold.exhausted().iter().map(|&i| game.budgets()[i]).sum();
        let free = (game.lenders() - threshold.index + 1) as f64;
        let share = (1.0 - exhausted_budget / sum_demand) / free;
        Self {
            threshold,
            sum_demand,
            exhausted_budget,
            share,
        }
    }

    fn market_rate(&self, game: &LendingGame) -> f64 {
        let free = (game.lenders() - self.threshold.index) as f64;
        let ratio = self.exhausted_budget / self.sum_demand;
        (game.rate_min() * (free + ratio) + game.rate_max() * (1.0 - ratio)) / (free + 1.0)
    }
}

/// Computes the unique pure Nash equilibrium in `O(mn + m log m)`.
pub fn solve_equilibrium(game: &LendingGame) -> EquilibriumResult {
    let (m, n) = game.shape();
    let cf = ClosedForm::new(game);
    let budgets = game.budgets();
    let demands = game.demands();

    let mut in_exhausted = vec![false; m];
    for &i in cf.threshold.exhausted() {
        in_exhausted[i] = true;
    }

    let mut s = Array2::zeros((m, n));
    let mut multipliers_budget = vec![0.0; m];
    for (i, mut row) in s.outer_iter_mut().enumerate() {
        let fraction = if in_exhausted[i] {
            budgets[i] / cf.sum_demand
        } else {
            cf.share
        };
        for (x, &d) in row.iter_mut().zip(demands) {
            *x = fraction * d;
        }
        if in_exhausted[i] {
            multipliers_budget[i] = game.spread() * (cf.share - budgets[i] / cf.sum_demand);
        }
    }

    EquilibriumResult {
        profile: StrategyProfile::from_array_unchecked(s),
        threshold_index: cf.threshold.index,
        exhausted_set: cf.threshold.exhausted().to_vec(),
        multipliers_budget,
        multipliers_nonneg: Array2::zeros((m, n)),
        market_rate: cf.market_rate(game),
    }
}

/// Common borrower rate at equilibrium, without building the profile.
pub fn market_rate(game: &LendingGame) -> f64 {
    ClosedForm::new(game).market_rate(game)
}

/// Residuals of the four KKT condition groups for maximising the potential
/// over the strategy space.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Largest budget overshoot or negative entry.
    pub primal_residual: f64,
    /// Largest `|dL/ds_ij|`.
    pub stationarity_residual: f64,
    /// Largest negative multiplier magnitude.
    pub dual_residual: f64,
    /// Largest `|multiplier * constraint slack|`.
    pub slackness_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual
            .max(self.stationarity_residual)
            .max(self.dual_residual)
            .max(self.slackness_residual)
    }
}

/// Evaluates the KKT system at `(profile, multipliers)`.
///
/// The Lagrangian derivative is
/// `(rate_min - rate_max) ((s_ij + S_j) / d_j - 1) - mu_i + mu_ij`.
pub fn kkt_check(
    game: &LendingGame,
    profile: &StrategyProfile,
    multipliers_budget: &[f64],
    multipliers_nonneg: &Array2<f64>,
    tolerance: f64,
) -> Result<KktReport> {
    game.check_shape(profile)?;
    let (m, _) = game.shape();
    if multipliers_budget.len() != m {
        return Err(GameError::LengthMismatch {
            expected: m,
            found: multipliers_budget.len(),
        });
    }
    if multipliers_nonneg.dim() != game.shape() {
        return Err(GameError::ShapeMismatch {
            expected: game.shape(),
            found: multipliers_nonneg.dim(),
        });
    }

    let s = profile.matrix();
    let grad = game.gradient_unchecked(s);
    let mut primal: f64 = 0.0;
    let mut stationarity: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut slackness: f64 = 0.0;

    for i in 0..m {
        let mu = multipliers_budget[i];
        let slack = game.budgets()[i] - profile.row_total(i);
        primal = primal.max(-slack);
        dual = dual.max(-mu);
        slackness = slackness.max((mu * slack).abs());
        for (j, &g) in grad.row(i).iter().enumerate() {
            let nu = multipliers_nonneg[[i, j]];
            let x = s[[i, j]];
            primal = primal.max(-x);
            dual = dual.max(-nu);
            slackness = slackness.max((nu * x).abs());
            stationarity = stationarity.max((g - mu + nu).abs());
        }
    }

    let passed = primal <= tolerance && stationarity <= tolerance && dual <= tolerance && slackness <= tolerance;
    Ok(KktReport {
        primal_residual: primal,
        stationarity_residual: stationarity,
        dual_residual: dual,
        slackness_residual: slackness,
        tolerance,
        passed,
    })
}

impl EquilibriumResult {
    pub fn kkt(&self, game: &LendingGame, tolerance: f64) -> Result<KktReport> {
        kkt_check(
            game,
            &self.profile,
            &self.multipliers_budget,
            &self.multipliers_nonneg,
            tolerance,
        )
    }
}
