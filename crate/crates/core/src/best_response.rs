//! Exact best responses by water-filling.
//!
//! With the others' supply `T_j` fixed, lender `i` maximises
//! `(rate_max - rate_min) * sum_j (1 - (T_j + x_j) / d_j) x_j` over
//! `{x >= 0, sum(x) <= c_i}`. The objective is separable and strictly concave,
//! so the maximiser is `x_j(l) = max(0, ((1 - l) d_j - T_j) / 2)` for the
//! smallest normalised budget price `l >= 0` that keeps `sum(x) <= c_i`.
//! Borrower `j` is active while `l < 1 - T_j / d_j`, so the price is found
//! exactly by walking the sorted breakpoints.

use crate::error::Result;
use crate::game::{LendingGame, StrategyProfile};

/// Supply the other lenders give each borrower, seen from one lender.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDemand(pub Vec<f64>);

impl ResidualDemand {
    pub fn for_lender(profile: &StrategyProfile, i: usize) -> Self {
        let totals = profile.column_totals();
        Self::from_totals(&totals, profile, i)
    }

    pub(crate) fn from_totals(totals: &[f64], profile: &StrategyProfile, i: usize) -> Self {
        Self(
            totals
                .iter()
                .zip(profile.row(i))
                .map(|(t, x)| (t - x).max(0.0))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub strategy: Vec<f64>,
    /// Budget multiplier divided by the corridor width; zero when the budget is slack.
    pub budget_price: f64,
    pub budget_binding: bool,
}

/// Best response of a lender with `budget` facing residual supply `others`.
pub fn water_fill(demands: &[f64], others: &ResidualDemand, budget: f64) -> BestResponse {
    let unconstrained: Vec<f64> = demands
        .iter()
        .zip(&others.0)
        .map(|(&d, &t)| ((d - t) / 2.0).max(0.0))
        .collect();
    let total: f64 = unconstrained.iter().sum();
    if total < budget {
        return BestResponse {
            strategy: unconstrained,
            budget_price: 0.0,
            budget_binding: false,
        };
    }
    if total == budget {
        return BestResponse {
            strategy: unconstrained,
            budget_price: 0.0,
            budget_binding: true,
        };
    }

    // (breakpoint, d_j, T_j) for borrowers that are profitable at price zero;
    // the rest stay at zero for every non-negative price.
    let mut active: Vec<(f64, f64, f64)> = demands
        .iter()
        .zip(&others.0)
        .filter(|(&d, &t)| t < d)
        .map(|(&d, &t)| (1.0 - t / d, d, t))
        .collect();
    active.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut excess = 0.0; // sum of (d_j - T_j) over the active prefix
    let mut weight = 0.0; // sum of d_j over the active prefix
    let mut price = 0.0;
    for k in 0..active.len() {
        let (_, d, t) = active[k];
        excess += d - t;
        weight += d;
        price = (excess - 2.0 * budget) / weight;
        let next = active.get(k + 1).map_or(0.0, |b| b.0);
        if price >= next {
            break;
        }
    }
    let price = price.max(0.0);

    let strategy = demands
        .iter()
        .zip(&others.0)
        .map(|(&d, &t)| (((1.0 - price) * d - t) / 2.0).max(0.0))
        .collect();
    BestResponse {
        strategy,
        budget_price: price,
        budget_binding: true,
    }
}

/// The unique best response of lender `i` to the others' strategies in `profile`.
pub fn best_response(game: &LendingGame, profile: &StrategyProfile, i: usize) -> Result<Vec<f64>> {
    game.check_shape(profile)?;
    game.check_lender(i)?;
    let others = ResidualDemand::for_lender(profile, i);
    Ok(water_fill(game.demands(), &others, game.budgets()[i]).strategy)
}

/// Utility lender `i` would gain by switching to its best response.
pub fn best_response_gain(game: &LendingGame, profile: &StrategyProfile, i: usize) -> Result<f64> {
    game.check_shape(profile)?;
    game.check_lender(i)?;
    let totals = profile.column_totals();
    Ok(gain_with_totals(game, profile, &totals, i).1)
}

/// Best response and its gain, reusing precomputed column totals.
pub(crate) fn gain_with_totals(
    game: &LendingGame,
    profile: &StrategyProfile,
    totals: &[f64],
    i: usize,
) -> (Vec<f64>, f64) {
    let others = ResidualDemand::from_totals(totals, profile, i);
    let br = water_fill(game.demands(), &others, game.budgets()[i]).strategy;
    let current = lender_utility(game, &others, profile.row(i).iter().copied());
    let improved = lender_utility(game, &others, br.iter().copied());
    (br, (improved - current).max(0.0))
}

fn lender_utility(game: &LendingGame, others: &ResidualDemand, row: impl Iterator<Item = f64>) -> f64 {
    row.zip(game.demands())
        .zip(&others.0)
        .map(|((x, &d), &t)| game.spread() * (1.0 - (t + x) / d) * x)
        .sum()
}
