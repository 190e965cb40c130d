//! Euclidean projection onto a lender's strategy set `{x >= 0, sum(x) <= c}`.

/// Projects `y` onto `{x >= 0, sum(x) <= budget}`.
///
/// If the positive part of `y` already fits the budget it is the answer;
/// otherwise the budget binds and `y` is projected onto the scaled simplex
/// `{x >= 0, sum(x) = budget}` with the sort-based threshold rule.
pub fn project_onto_budget(y: &[f64], budget: f64) -> Vec<f64> {
    let positive: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
    if positive.iter().sum::<f64>() <= budget {
        return positive;
    }

    let mut sorted = positive;
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - budget) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn point_outside_both_constraints() {
        let x = project_onto_budget(&[-1.0, 2.0], 1.0);
        assert_eq!(x, vec![0.0, 1.0]);
    }

    #[test]
    fn matches_grid_oracle_in_2d() {
        let y = [-1.0, 2.0];
        let step = 1e-3;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for a in 0..=1000 {
            for b in 0..=(1000 - a) {
                let p = [a as f64 * step, b as f64 * step];
                let d = sq_dist(&p, &y);
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        let x = project_onto_budget(&y, 1.0);
        assert!((x[0] - best.1[0]).abs() <= step && (x[1] - best.1[1]).abs() <= step);
    }

    #[test]
    fn interior_points_are_fixed() {
        let y = [0.2, 0.3, 0.1];
        assert_eq!(project_onto_budget(&y, 1.0), y.to_vec());
        assert_eq!(project_onto_budget(&[-0.5, 0.4], 1.0), vec![0.0, 0.4]);
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_optimal(
            y in prop::collection::vec(-5.0f64..5.0, 1..8),
            budget in 0.01f64..6.0,
            probe in prop::collection::vec(0.0f64..1.0, 8),
        ) {
            let x = project_onto_budget(&y, budget);
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            prop_assert!(x.iter().sum::<f64>() <= budget + 1e-12);
            // any other feasible point is at least as far from y
            let total: f64 = probe[..y.len()].iter().sum::<f64>().max(1e-9);
            let other: Vec<f64> = probe[..y.len()].iter().map(|p| p / total * budget * 0.9).collect();
            prop_assert!(sq_dist(&x, &y) <= sq_dist(&other, &y) + 1e-12);
            // variational inequality: (y - x) . (z - x) <= 0 for feasible z
            let ip: f64 = y.iter().zip(&x).zip(&other).map(|((yv, xv), zv)| (yv - xv) * (zv - xv)).sum();
            prop_assert!(ip <= 1e-9);
        }
    }
}
