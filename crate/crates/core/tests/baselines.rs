mod common;

use common::linear_oracle::{kkt_violation, random_problem, ridge_by_descent};
use fetalfuse::baselines::{lasso_fit, lasso_lambda_max, lasso_select, rfe_select, ridge_fit, Gbr, GbrConfig};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn ridge_matches_descent_oracle() {
    for seed in 0..10 {
        let (x, y) = random_problem(seed, 20, 5);
        for lambda in [0.0, 0.5, 10.0] {
            let closed = ridge_fit(&x, &y, lambda).unwrap();
            let (w, b) = ridge_by_descent(&x, &y, lambda);
            for (a, o) in closed.weights.iter().zip(&w) {
                assert!((a - o).abs() < 1e-6, "seed {seed} λ {lambda}: {a} vs {o}");
            }
            assert!((closed.intercept - b).abs() < 1e-6, "seed {seed} λ {lambda}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lasso_solutions_satisfy_kkt(seed in any::<u64>(), frac in 0.01f64..0.95, p in 2usize..8) {
        let (x, y) = random_problem(seed, 30, p);
        let lambda = frac * lasso_lambda_max(&x, &y).unwrap();
        let fit = lasso_fit(&x, &y, lambda).unwrap();
        let v = kkt_violation(&x, &y, &fit.weights, fit.intercept, lambda);
        prop_assert!(v < 1e-6, "violation {v}");
    }

    #[test]
    fn lasso_kkt_with_near_duplicate_columns(seed in any::<u64>(), frac in 0.01f64..0.95, eps in 1e-9f64..1e-3) {
        let (mut x, _) = random_problem(seed, 20, 6);
        let mut rng = common::rng(seed ^ 1);
        for i in 0..20 {
            x[(i, 1)] = x[(i, 0)] + eps * rng.random_range(-1.0..1.0);
            x[(i, 4)] = x[(i, 3)] * (1.0 + eps * rng.random_range(-1.0..1.0));
        }
        let y: Vec<f64> = (0..20).map(|i| 150.0 + 30.0 * x[(i, 1)] - 12.0 * x[(i, 4)] + 3.0 * x[(i, 5)]).collect();
        let lambda = frac * lasso_lambda_max(&x, &y).unwrap();
        let fit = lasso_fit(&x, &y, lambda).unwrap();
        let v = kkt_violation(&x, &y, &fit.weights, fit.intercept, lambda);
        prop_assert!(v < 1e-6, "violation {v}");
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>()) {
        let (x, y) = random_problem(seed, 25, 6);
        let lambda = 0.2 * lasso_lambda_max(&x, &y).unwrap();
        prop_assert_eq!(lasso_select(&x, &y, lambda).unwrap(), lasso_select(&x, &y, lambda).unwrap());
        prop_assert_eq!(rfe_select(&x, &y, 3, 1.0).unwrap(), rfe_select(&x, &y, 3, 1.0).unwrap());
    }

    #[test]
    fn boosting_loss_is_monotone(seed in any::<u64>(), depth in 1usize..4, shrink in 0.05f64..1.0) {
        let (x, y) = random_problem(seed, 25, 3);
        let mut trace = Vec::new();
        let cfg = GbrConfig { n_trees: 30, max_depth: depth, shrinkage: shrink, ..GbrConfig::default() };
        Gbr::fit_traced(&x, &y, &cfg, |m| trace.push(m)).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{trace:?}");
        }
    }
}
