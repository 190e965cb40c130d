//! Independent numerical references used to cross-check the closed forms:
//! a generic projected-gradient maximiser of the potential, finite
//! differences, the concavity gap, an entrywise Hessian contraction and a
//! grid-search best response.

use ndarray::Array2;
use twofloat::TwoFloat;

use crate::dynamics::{project_rows, stability_bound};
use crate::error::{GameError, Result};
use crate::game::{LendingGame, StrategyProfile};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;
pub const DEFAULT_ORACLE_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub profile: StrategyProfile,
    pub achieved_potential: f64,
    pub iterations: usize,
    /// `|P(s + h grad) - s|_inf / (h spread)` at the returned profile.
    pub final_projected_gradient_norm: f64,
    /// False when `max_iters` ran out before the tolerance was met.
    pub converged: bool,
}

/// Scale-free projected-gradient norm: zero exactly at the maximiser.
pub fn projected_gradient_norm(game: &LendingGame, profile: &StrategyProfile) -> Result<f64> {
    game.check_shape(profile)?;
    let step = stability_bound(game, &vec![1.0; game.lenders()]);
    Ok(mapping_norm(game, profile.matrix(), step))
}

fn mapping_norm(game: &LendingGame, s: &Array2<f64>, step: f64) -> f64 {
    let g = game.gradient_unchecked(s);
    let moved = project_rows(game, s + &(g * step));
    moved
        .matrix()
        .iter()
        .zip(s)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
        / (step * game.spread())
}

/// Maximises the potential over the joint strategy set from the zero profile
/// by accelerated projected gradient ascent with adaptive restart.
///
/// Knows nothing about thresholds or multipliers; it only uses the gradient
/// and the per-lender projection.
pub fn projected_gradient_solve(game: &LendingGame, tol: f64, max_iters: usize) -> OracleSolution {
    // step 1 / (2L) with L the largest Hessian eigenvalue bound
    let step = stability_bound(game, &vec![1.0; game.lenders()]);
    let mut x = Array2::<f64>::zeros((game.lenders(), game.borrowers()));
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut norm = mapping_norm(game, &x, step);
    let mut iterations = 0;
    while norm > tol && iterations < max_iters {
        iterations += 1;
        let g = game.gradient_unchecked(&y);
        let next = project_rows(game, &y + &(g * step)).into_matrix();
        let direction = &next - &x;
        let restart = (&y - &next).iter().zip(&direction).map(|(a, b)| a * b).sum::<f64>() > 0.0;
        if restart {
            momentum = 1.0;
            y = next.clone();
        } else {
            let upcoming = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            y = &next + &(direction * ((momentum - 1.0) / upcoming));
            momentum = upcoming;
        }
        x = next;
        norm = mapping_norm(game, &x, step);
    }
    let achieved_potential = game.potential_unchecked(&x);
    OracleSolution {
        profile: StrategyProfile::from_array_unchecked(x),
        achieved_potential,
        iterations,
        final_projected_gradient_norm: norm,
        converged: norm <= tol,
    }
}

/// Central finite-difference gradient of the potential. Perturbed points may
/// leave the strategy set; the potential is a polynomial so that is harmless.
pub fn finite_difference_gradient(game: &LendingGame, profile: &StrategyProfile, h: f64) -> Result<Array2<f64>> {
    game.check_shape(profile)?;
    let base = profile.matrix();
    let mut out = Array2::zeros(base.raw_dim());
    for ((i, j), g) in out.indexed_iter_mut() {
        let mut plus = base.clone();
        plus[[i, j]] += h;
        let mut minus = base.clone();
        minus[[i, j]] -= h;
        *g = (game.potential_unchecked(&plus) - game.potential_unchecked(&minus)) / (2.0 * h);
    }
    Ok(out)
}

/// `(measured, closed)` for `Phi(l s + (1 - l) t) - l Phi(s) - (1 - l) Phi(t)`.
///
/// The closed form is
/// `l (1 - l) sum_j spread / (2 d_j) (sum_i D_ij^2 + (sum_i D_ij)^2)`
/// with `D = s - t`; it is non-negative since the potential is concave.
///
/// Both sides are evaluated in double-double arithmetic, including the mixed
/// profile, and rounded once at the end. In plain `f64` the three potentials
/// can be four orders of magnitude larger than their combination.
pub fn concavity_gap(
    game: &LendingGame,
    s: &StrategyProfile,
    t: &StrategyProfile,
    lambda: f64,
) -> Result<(f64, f64)> {
    game.check_feasible(s)?;
    game.check_feasible(t)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(GameError::InvalidConfig(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let l = TwoFloat::from(lambda);
    let k = TwoFloat::from(1.0) - l;
    let mixed: Vec<TwoFloat> = s
        .matrix()
        .iter()
        .zip(t.matrix())
        .map(|(&a, &b)| l * TwoFloat::from(a) + k * TwoFloat::from(b))
        .collect();
    let lift = |p: &StrategyProfile| -> Vec<TwoFloat> { p.matrix().iter().map(|&x| TwoFloat::from(x)).collect() };
    let measured = wide_potential(game, &mixed) - l * wide_potential(game, &lift(s)) - k * wide_potential(game, &lift(t));

    let spread = TwoFloat::new_sub(game.rate_max(), game.rate_min());
    let mut closed = TwoFloat::from(0.0);
    for (j, &d) in game.demands().iter().enumerate() {
        let mut squares = TwoFloat::from(0.0);
        let mut total = TwoFloat::from(0.0);
        for i in 0..game.lenders() {
            let delta = TwoFloat::new_sub(s.matrix()[[i, j]], t.matrix()[[i, j]]);
            squares += delta * delta;
            total += delta;
        }
        closed += spread * (squares + total * total) / (TwoFloat::from(2.0) * d);
    }
    Ok((narrow(measured), narrow(l * k * closed)))
}

/// Potential of a row-major double-double profile.
fn wide_potential(game: &LendingGame, s: &[TwoFloat]) -> TwoFloat {
    let n = game.borrowers();
    let spread = TwoFloat::new_sub(game.rate_max(), game.rate_min());
    let mut phi = TwoFloat::from(0.0);
    for (j, &d) in game.demands().iter().enumerate() {
        let mut supply = TwoFloat::from(0.0);
        let mut squares = TwoFloat::from(0.0);
        for x in s.iter().skip(j).step_by(n) {
            supply += *x;
            squares += *x * *x;
        }
        phi += spread * supply - spread * (squares + supply * supply) / (TwoFloat::from(2.0) * d);
    }
    phi
}

fn narrow(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

/// `sum_j w(d_j) (sum_i v_ij^2 + (sum_i v_ij)^2)`.
fn column_form(game: &LendingGame, v: &Array2<f64>, w: impl Fn(f64) -> f64) -> f64 {
    v.columns()
        .into_iter()
        .zip(game.demands())
        .map(|(col, &d)| {
            let total = col.sum();
            w(d) * (col.iter().map(|x| x * x).sum::<f64>() + total * total)
        })
        .sum()
}

fn check_direction(game: &LendingGame, v: &Array2<f64>) -> Result<()> {
    let (m, n) = game.shape();
    if v.dim() != (m, n) {
        return Err(GameError::ShapeMismatch {
            expected: (m, n),
            found: v.dim(),
        });
    }
    Ok(())
}

/// `v^T J v` for the constant potential Hessian, by its per-borrower
/// structure.
pub fn jacobian_quadratic_form(game: &LendingGame, v: &Array2<f64>) -> Result<f64> {
    check_direction(game, v)?;
    Ok(column_form(game, v, |d| -game.spread() / d))
}

/// `v^T J v` by summing over every pair of entries of the Hessian.
pub fn hessian_contraction(game: &LendingGame, v: &Array2<f64>) -> Result<f64> {
    check_direction(game, v)?;
    let (m, n) = game.shape();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            for k in 0..m {
                for l in 0..n {
                    if l != j {
                        continue;
                    }
                    let coeff = -game.spread() / game.demands()[j];
                    let h = if k == i { 2.0 * coeff } else { coeff };
                    total += v[[i, j]] * h * v[[k, l]];
                }
            }
        }
    }
    Ok(total)
}

/// Best response of lender `i` by exhaustive search over the grid
/// `step * Z^n` inside its strategy set, together with the points of the
/// budget face whose first `n - 1` coordinates lie on the grid. Only for
/// `n <= 3`.
///
/// Each coordinate is capped at `(d_j - T_j) / 2`, beyond which raising it
/// lowers utility whatever the other coordinates are.
pub fn grid_best_response(game: &LendingGame, profile: &StrategyProfile, i: usize, step: f64) -> Result<Vec<f64>> {
    game.check_shape(profile)?;
    game.check_lender(i)?;
    let n = game.borrowers();
    if n > 3 {
        return Err(GameError::InvalidConfig(format!("grid search supports at most 3 borrowers, got {n}")));
    }
    if !(step > 0.0) {
        return Err(GameError::InvalidConfig(format!("grid step must be positive, got {step}")));
    }
    let totals = profile.column_totals();
    let others: Vec<f64> = totals.iter().zip(profile.row(i)).map(|(t, x)| (t - x).max(0.0)).collect();
    let budget = game.budgets()[i];
    let caps: Vec<usize> = game
        .demands()
        .iter()
        .zip(&others)
        .map(|(&d, &t)| (((d - t) / 2.0).max(0.0).min(budget) / step).ceil() as usize)
        .collect();
    let value = |x: &[f64]| -> f64 {
        x.iter()
            .zip(game.demands())
            .zip(&others)
            .map(|((x, d), t)| (1.0 - (t + x) / d) * x)
            .sum()
    };

    let mut best = (value(&vec![0.0; n]), vec![0.0; n]);
    let mut idx = vec![0usize; n];
    loop {
        let point: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        if point.iter().sum::<f64>() <= budget {
            let v = value(&point);
            if v > best.0 {
                best = (v, point.clone());
            }
        }
        if idx[n - 1] == 0 {
            let rest = budget - point[..n - 1].iter().sum::<f64>();
            if rest >= 0.0 && rest <= caps[n - 1] as f64 * step {
                let mut face = point;
                face[n - 1] = rest;
                let v = value(&face);
                if v > best.0 {
                    best = (v, face);
                }
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(best.1);
            }
            idx[pos] += 1;
            if idx[pos] <= caps[pos] {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
