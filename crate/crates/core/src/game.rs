//! Lending game instances, strategy profiles and the model quantities
//! evaluated on them: borrower interest rates, lender utilities, the exact
//! potential and its gradient.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{GameError, Result};

/// Absolute slack allowed on a lender's budget constraint.
pub const FEAS_TOL: f64 = 1e-9;

/// Absolute tolerance for algebraic identities on inputs of magnitude up to 1e3.
pub const NUM_TOL: f64 = 1e-10;

/// An interbank lending game: `m` lenders with cash budgets, `n` borrowers
/// with demands, and the central-bank rate corridor `[rate_min, rate_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LendingGame {
    budgets: Vec<f64>,
    demands: Vec<f64>,
    rate_min: f64,
    rate_max: f64,
}

/// Constants derived from a game that bound how fast the potential gradient
/// can vary.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    /// `2 (rate_max - rate_min) / d_j` for each borrower.
    pub per_borrower: Vec<f64>,
    /// Worst case over borrowers.
    pub a: f64,
    pub sum_demand: f64,
}

impl LendingGame {
    pub fn new(budgets: Vec<f64>, demands: Vec<f64>, rate_min: f64, rate_max: f64) -> Result<Self> {
        if budgets.is_empty() {
            return Err(GameError::NoLenders);
        }
        if demands.is_empty() {
            return Err(GameError::NoBorrowers);
        }
        if let Some((index, &value)) = budgets
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return Err(GameError::InvalidBudget { index, value });
        }
        if let Some((index, &value)) = demands
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d > 0.0))
        {
            return Err(GameError::InvalidDemand { index, value });
        }
        if !(rate_min.is_finite() && rate_max.is_finite() && 0.0 < rate_min && rate_min < rate_max) {
            return Err(GameError::InvalidCorridor { rate_min, rate_max });
        }
        Ok(Self {
            budgets,
            demands,
            rate_min,
            rate_max,
        })
    }

    pub fn lenders(&self) -> usize {
        self.budgets.len()
    }

    pub fn borrowers(&self) -> usize {
        self.demands.len()
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn rate_min(&self) -> f64 {
        self.rate_min
    }

    pub fn rate_max(&self) -> f64 {
        self.rate_max
    }

    /// Width of the corridor, `rate_max - rate_min`.
    pub fn spread(&self) -> f64 {
        self.rate_max - self.rate_min
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.lenders(), self.borrowers())
    }

    pub fn sum_demand(&self) -> f64 {
        self.demands.iter().sum()
    }

    pub fn max_budget(&self) -> f64 {
        self.budgets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn derived(&self) -> DerivedConstants {
        let per_borrower: Vec<f64> = self.demands.iter().map(|d| 2.0 * self.spread() / d).collect();
        let a = per_borrower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        DerivedConstants {
            per_borrower,
            a,
            sum_demand: self.sum_demand(),
        }
    }

    pub fn check_lender(&self, i: usize) -> Result<()> {
        if i >= self.lenders() {
            return Err(GameError::LenderOutOfRange {
                index: i,
                count: self.lenders(),
            });
        }
        Ok(())
    }

    pub fn check_borrower(&self, j: usize) -> Result<()> {
        if j >= self.borrowers() {
            return Err(GameError::BorrowerOutOfRange {
                index: j,
                count: self.borrowers(),
            });
        }
        Ok(())
    }

    pub fn check_shape(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.shape() != self.shape() {
            return Err(GameError::ShapeMismatch {
                expected: self.shape(),
                found: profile.shape(),
            });
        }
        Ok(())
    }

    /// Shape plus budget feasibility (within [`FEAS_TOL`]).
    pub fn check_feasible(&self, profile: &StrategyProfile) -> Result<()> {
        self.check_shape(profile)?;
        for (i, row) in profile.matrix().axis_iter(Axis(0)).enumerate() {
            let total: f64 = row.sum();
            if total > self.budgets[i] + FEAS_TOL {
                return Err(GameError::BudgetExceeded {
                    lender: i,
                    total,
                    budget: self.budgets[i],
                });
            }
        }
        Ok(())
    }

    /// Total supply received by each borrower.
    pub fn supply(&self, profile: &StrategyProfile) -> Result<Vec<f64>> {
        self.check_shape(profile)?;
        Ok(profile.column_totals())
    }

    fn rate_at(&self, supplied: f64, j: usize) -> f64 {
        (self.rate_min - self.rate_max) * supplied / self.demands[j] + self.rate_max
    }

    /// Rate offered by borrower `j`; falls below `rate_min` when oversupplied.
    pub fn interest_rate(&self, profile: &StrategyProfile, j: usize) -> Result<f64> {
        self.check_shape(profile)?;
        self.check_borrower(j)?;
        Ok(self.rate_at(profile.matrix().column(j).sum(), j))
    }

    pub fn interest_rates(&self, profile: &StrategyProfile) -> Result<Vec<f64>> {
        let supply = self.supply(profile)?;
        Ok(supply.iter().enumerate().map(|(j, &t)| self.rate_at(t, j)).collect())
    }

    /// Rate borrower `j` would offer if only the first `z` lenders had lent.
    pub fn prefix_interest_rate(&self, profile: &StrategyProfile, j: usize, z: usize) -> Result<f64> {
        self.check_shape(profile)?;
        self.check_borrower(j)?;
        if z > self.lenders() {
            return Err(GameError::PrefixOutOfRange {
                z,
                count: self.lenders(),
            });
        }
        let prefix: f64 = profile.matrix().column(j).iter().take(z).sum();
        Ok(self.rate_at(prefix, j))
    }

    /// Profit of lender `i` in excess of the deposit facility.
    pub fn utility(&self, profile: &StrategyProfile, i: usize) -> Result<f64> {
        self.check_shape(profile)?;
        self.check_lender(i)?;
        let supply = profile.column_totals();
        Ok(self.utility_with_supply(profile.row(i), &supply))
    }

    pub(crate) fn utility_with_supply(&self, row: ArrayView1<'_, f64>, supply: &[f64]) -> f64 {
        row.iter()
            .zip(supply)
            .enumerate()
            .map(|(j, (&x, &t))| (self.rate_at(t, j) - self.rate_min) * x)
            .sum()
    }

    /// Potential function, evaluated through its quadratic form.
    pub fn potential(&self, profile: &StrategyProfile) -> Result<f64> {
        self.check_shape(profile)?;
        Ok(self.potential_unchecked(profile.matrix()))
    }

    pub(crate) fn potential_unchecked(&self, s: &Array2<f64>) -> f64 {
        let spread = self.spread();
        s.axis_iter(Axis(1))
            .zip(&self.demands)
            .map(|(col, &d)| {
                let (sq, total) = col.iter().fold((0.0, 0.0), |(sq, t), &x| (sq + x * x, t + x));
                -spread / (2.0 * d) * (sq + total * total) + spread * total
            })
            .sum()
    }

    /// Potential function evaluated as the telescoped sum over lender prefixes.
    ///
    /// Reference path for cross-checking [`LendingGame::potential`].
    pub fn potential_telescoped(&self, profile: &StrategyProfile) -> Result<f64> {
        self.check_shape(profile)?;
        let mut phi = 0.0;
        for (j, col) in profile.matrix().axis_iter(Axis(1)).enumerate() {
            let mut prefix = 0.0;
            for &x in col {
                prefix += x;
                phi += (self.rate_at(prefix, j) - self.rate_min) * x;
            }
        }
        Ok(phi)
    }

    /// Gradient of the potential; entry `(i, j)` is also lender `i`'s marginal
    /// utility of lending one more unit to borrower `j`.
    pub fn potential_gradient(&self, profile: &StrategyProfile) -> Result<Array2<f64>> {
        self.check_shape(profile)?;
        Ok(self.gradient_unchecked(profile.matrix()))
    }

    pub(crate) fn gradient_unchecked(&self, s: &Array2<f64>) -> Array2<f64> {
        let supply = s.sum_axis(Axis(0));
        let neg_spread = self.rate_min - self.rate_max;
        let mut grad = Array2::zeros(s.raw_dim());
        for ((i, j), g) in grad.indexed_iter_mut() {
            *g = neg_spread * ((s[[i, j]] + supply[j]) / self.demands[j] - 1.0);
        }
        grad
    }
}

/// An `m x n` matrix of lending amounts; row `i` is lender `i`'s strategy.
///
/// Entries are non-negative. Budget feasibility depends on the game and is
/// checked by [`LendingGame::check_feasible`]; profiles over budget are still
/// representable so that constraint violations can be measured.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    s: Array2<f64>,
}

impl StrategyProfile {
    pub fn new(s: Array2<f64>) -> Result<Self> {
        if let Some(((lender, borrower), &value)) = s
            .indexed_iter()
            .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
        {
            return Err(GameError::InvalidAmount {
                lender,
                borrower,
                value,
            });
        }
        Ok(Self { s })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            s: Array2::zeros((m, n)),
        }
    }

    pub fn zeros_for(game: &LendingGame) -> Self {
        Self::zeros(game.lenders(), game.borrowers())
    }

    /// Builds a profile from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(GameError::LengthMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let s = Array2::from_shape_vec((m, n), flat).expect("row lengths checked");
        Self::new(s)
    }

    pub(crate) fn from_array_unchecked(s: Array2<f64>) -> Self {
        debug_assert!(s.iter().all(|x| x.is_finite() && *x >= 0.0));
        Self { s }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.s.dim()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[[i, j]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.s.row(i)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.s.outer_iter().map(|r| r.to_vec()).collect()
    }

    pub fn row_total(&self, i: usize) -> f64 {
        self.s.row(i).sum()
    }

    pub fn column_totals(&self) -> Vec<f64> {
        self.s.sum_axis(Axis(0)).to_vec()
    }

    /// Replaces lender `i`'s strategy.
    pub fn with_row(&self, i: usize, row: &[f64]) -> Result<Self> {
        let (m, n) = self.shape();
        if i >= m {
            return Err(GameError::LenderOutOfRange { index: i, count: m });
        }
        if row.len() != n {
            return Err(GameError::LengthMismatch {
                expected: n,
                found: row.len(),
            });
        }
        let mut s = self.s.clone();
        s.row_mut(i).assign(&ArrayView1::from(row));
        Self::new(s)
    }

    pub(crate) fn set_row(&mut self, i: usize, row: &[f64]) {
        self.s.row_mut(i).assign(&ArrayView1::from(row));
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &StrategyProfile) -> f64 {
        self.s
            .iter()
            .zip(other.s.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_distance(&self, other: &StrategyProfile) -> f64 {
        self.s.iter().zip(other.s.iter()).map(|(a, b)| (a - b).abs()).sum()
    }
}
