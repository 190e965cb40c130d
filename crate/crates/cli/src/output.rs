//! Equilibrium reports (JSON) and trajectory exports (CSV).

use std::fmt::Write as _;

use lendgame_core::dynamics::Trajectory;
use lendgame_core::equilibrium::DEFAULT_KKT_TOL;
use lendgame_core::{solve_equilibrium, LendingGame};
use serde::Serialize;

/// Header of the trajectory file.
pub const TRAJECTORY_HEADER: &str = "step,time,lender_updated,potential,lyapunov_gap";
/// Header of the snapshot side file.
pub const SNAPSHOT_HEADER: &str = "step,lender,borrower,amount";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktSummary {
    pub primal_residual: f64,
    pub stationarity_residual: f64,
    pub dual_residual: f64,
    pub slackness_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub description: String,
    pub lenders: usize,
    pub borrowers: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    /// Equilibrium amounts, one row per lender.
    pub equilibrium: Vec<Vec<f64>>,
    pub threshold_index: usize,
    pub exhausted_set: Vec<usize>,
    pub multipliers_budget: Vec<f64>,
    pub market_rate: f64,
    pub interest_rates: Vec<f64>,
    pub potential: f64,
    pub kkt: KktSummary,
}

pub fn solve_report(game: &LendingGame, description: &str) -> SolveReport {
    let eq = solve_equilibrium(game);
    let kkt = eq.kkt(game, DEFAULT_KKT_TOL).expect("equilibrium matches game shape");
    SolveReport {
        description: description.to_string(),
        lenders: game.lenders(),
        borrowers: game.borrowers(),
        rate_min: game.rate_min(),
        rate_max: game.rate_max(),
        equilibrium: eq.profile.rows(),
        threshold_index: eq.threshold_index,
        exhausted_set: eq.exhausted_set.clone(),
        multipliers_budget: eq.multipliers_budget.clone(),
        market_rate: eq.market_rate,
        interest_rates: game.interest_rates(&eq.profile).expect("shape"),
        potential: game.potential(&eq.profile).expect("shape"),
        kkt: KktSummary {
            primal_residual: kkt.primal_residual,
            stationarity_residual: kkt.stationarity_residual,
            dual_residual: kkt.dual_residual,
            slackness_residual: kkt.slackness_residual,
            tolerance: kkt.tolerance,
            passed: kkt.passed,
        },
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (trajectory.records.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &trajectory.records {
        let lender = r.lender.map_or(-1, |i| i as i64);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            num(r.time),
            lender,
            num(r.potential),
            num(r.lyapunov_gap)
        );
    }
    out
}

pub fn snapshots_csv(trajectory: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for snap in &trajectory.snapshots {
        for ((i, j), x) in snap.profile.matrix().indexed_iter() {
            let _ = writeln!(out, "{},{},{},{}", snap.step, i, j, num(*x));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use lendgame_core::{run, DynamicsConfig, StrategyProfile};

    #[test]
    fn csv_numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn trajectory_columns() {
        let game = LendingGame::new(vec![1.0, 10.0], vec![6.0], 0.02, 0.08).unwrap();
        let traj = run(&game, &StrategyProfile::zeros_for(&game), &DynamicsConfig::default()).unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[2], "-1");
        let second: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(second[2], "1");
        let snaps = snapshots_csv(&traj);
        assert!(snaps.starts_with(SNAPSHOT_HEADER));
    }

    #[test]
    fn report_for_two_lenders() {
        let game = LendingGame::new(vec![1.0, 10.0], vec![6.0], 0.02, 0.08).unwrap();
        let report = solve_report(&game, "");
        assert!((report.market_rate - 0.045).abs() < 1e-15);
        assert!(report.kkt.passed);
        assert_eq!(report.exhausted_set, vec![0]);
    }
}
