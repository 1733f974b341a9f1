use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sprox::baselines::penalty_subgradient;
use sprox::datagen::{random_graph, random_groups, random_problem};
use sprox::io::{matrix_to_csv, parse_matrix_csv};
use sprox::model::{eval_objective, eval_objective_mt, SolverConfig};
use sprox::multitask::{smoothed_eval_mt, spg_solve_mt, MultiTaskMapInfo};
use sprox::penalty::{build_fusion_map, build_group_map, project_dual, DualBall, NormMode, PenaltyLinearMap};
use sprox::solver::soft_threshold;
use sprox::{spg_solve, MultiTaskProblem};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || rng.random_range(-scale..scale))
}

fn any_map(rng: &mut ChaCha8Rng, dim: usize, gamma: f64) -> PenaltyLinearMap {
    if dim >= 2 && rng.random::<bool>() {
        let edges = rng.random_range(1..=(dim * (dim - 1) / 2).min(25));
        build_fusion_map(&random_graph(rng, dim, edges).unwrap(), gamma).unwrap()
    } else {
        let groups = rng.random_range(1..=5);
        build_group_map(&random_groups(rng, dim, groups, dim.min(6)).unwrap(), gamma).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothing_gap_within_mu_d(seed in any::<u64>(), dim in 1usize..15, mu in 1e-6f64..10.0, gamma in 0.0f64..5.0) {
        let mut r = rng(seed);
        let map = any_map(&mut r, dim, gamma);
        let beta = vector(&mut r, dim, 3.0);
        let exact = map.exact_penalty(&beta).unwrap();
        let smooth = map.smoothed_eval(&beta, mu).unwrap().value;
        let slack = 1e-12 * (1.0 + exact);
        prop_assert!(smooth <= exact + slack);
        prop_assert!(exact - smooth <= mu * map.d() + slack);
    }

    #[test]
    fn projection_is_feasible_and_idempotent(seed in any::<u64>(), sizes in prop::collection::vec(1usize..5, 1..5)) {
        let mut r = rng(seed);
        let total: usize = sizes.iter().sum();
        let u = vector(&mut r, total, 4.0);
        for ball in [DualBall::Box, DualBall::Blocks(sizes.clone())] {
            let p = project_dual(u.view(), &ball);
            match &ball {
                DualBall::Box => prop_assert!(p.iter().all(|v| v.abs() <= 1.0)),
                DualBall::Blocks(b) => {
                    let mut at = 0;
                    for &len in b {
                        let norm = p.slice(ndarray::s![at..at + len]).dot(&p.slice(ndarray::s![at..at + len])).sqrt();
                        prop_assert!(norm <= 1.0 + 1e-12);
                        at += len;
                    }
                }
            }
            let again = project_dual(p.view(), &ball);
            prop_assert!(again.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-15));
        }
    }

    #[test]
    fn map_rows_have_fixed_sparsity(seed in any::<u64>(), dim in 2usize..20, gamma in 0.1f64..3.0) {
        let mut r = rng(seed);
        let groups = random_groups(&mut r, dim, 4, dim.min(7)).unwrap();
        let gmap = build_group_map(&groups, gamma).unwrap();
        prop_assert!((0..gmap.rows()).all(|row| gmap.row(row).count() == 1));
        prop_assert!((gmap.d() - 2.0).abs() < 1e-15);
        let edges = r.random_range(1..=dim * (dim - 1) / 2);
        let fmap = build_fusion_map(&random_graph(&mut r, dim, edges).unwrap(), gamma).unwrap();
        prop_assert!((0..fmap.rows()).all(|row| fmap.row(row).count() == 2));
        prop_assert!((fmap.d() - edges as f64 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn stored_norm_dominates_power_iteration(seed in any::<u64>(), dim in 2usize..15, gamma in 0.1f64..3.0) {
        let mut r = rng(seed);
        let map = any_map(&mut r, dim, gamma);
        let power = map.spectral_norm(NormMode::Power, 1e-12).unwrap();
        prop_assert!(map.norm().value() >= power * (1.0 - 1e-9));
    }

    #[test]
    fn soft_threshold_minimises_scalar_problem(v in -10.0f64..10.0, t in 0.0f64..5.0, d in 1e-6f64..1.0) {
        let x = soft_threshold(Array1::from_elem(1, v).view(), t)[0];
        let f = |x: f64| 0.5 * (x - v) * (x - v) + t * x.abs();
        prop_assert!(f(x) <= f(x + d) + 1e-12);
        prop_assert!(f(x) <= f(x - d) + 1e-12);
    }

    #[test]
    fn subgradient_inequality(seed in any::<u64>(), dim in 1usize..12) {
        let mut r = rng(seed);
        let map = any_map(&mut r, dim, 1.3);
        let beta = vector(&mut r, dim, 2.0);
        let g = penalty_subgradient(&map, &beta).unwrap();
        let at = map.exact_penalty(&beta).unwrap();
        for _ in 0..10 {
            let z = vector(&mut r, dim, 3.0);
            let lower = at + g.dot(&(&z - &beta));
            prop_assert!(map.exact_penalty(&z).unwrap() >= lower - 1e-10 * (1.0 + lower.abs()));
        }
    }

    #[test]
    fn stacked_map_sums_task_penalties(seed in any::<u64>(), dim in 1usize..8, k in 1usize..5) {
        let mut r = rng(seed);
        let base = any_map(&mut r, k, 0.9);
        let info = MultiTaskMapInfo::new(base.clone(), dim);
        let b = Array2::from_shape_fn((dim, k), |_| r.random_range(-2.0..2.0));
        let per_row: f64 = b.rows().into_iter().map(|row| base.exact_penalty(&row.to_owned()).unwrap()).sum();
        let direct = info.exact_penalty(&b).unwrap();
        prop_assert!((per_row - direct).abs() <= 1e-12 * (1.0 + direct));
        let vec_b = Array1::from_iter(b.t().iter().copied());
        let stacked = info.stacked_map().exact_penalty(&vec_b).unwrap();
        prop_assert!((stacked - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!((info.d_mt() - dim as f64 * base.d()).abs() < 1e-12);
    }

    #[test]
    fn multitask_smoothing_gap(seed in any::<u64>(), dim in 1usize..8, k in 2usize..6, mu in 1e-4f64..2.0) {
        let mut r = rng(seed);
        let info = MultiTaskMapInfo::new(any_map(&mut r, k, 1.1), dim);
        let b = Array2::from_shape_fn((dim, k), |_| r.random_range(-2.0..2.0));
        let exact = info.exact_penalty(&b).unwrap();
        let smooth = smoothed_eval_mt(&info, &b, mu).unwrap().value;
        prop_assert!(smooth <= exact + 1e-12 * (1.0 + exact));
        prop_assert!(exact - smooth <= mu * info.d_mt() + 1e-12 * (1.0 + exact));
    }

    #[test]
    fn csv_round_trip_is_bitwise(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let mut r = rng(seed);
        let m = Array2::from_shape_fn((rows, cols), |_| r.random::<f64>() * 10f64.powi(r.random_range(-8..8)) - 0.5);
        let back = parse_matrix_csv(&matrix_to_csv(m.view()), "m.csv").unwrap();
        prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solve_result_invariants(seed in any::<u64>(), j in 2usize..12, lambda in 0.0f64..3.0) {
        let mut r = rng(seed);
        let problem = random_problem(&mut r, 15, j).unwrap();
        let map = any_map(&mut r, j, 1.0);
        let cfg = SolverConfig { record_trace: true, max_iter: 500, ..SolverConfig::with_lambda(lambda) };
        let fit = spg_solve(&problem, &map, &cfg).unwrap();
        let mu = fit.mu.unwrap();
        prop_assert_eq!(fit.trace.as_ref().unwrap().len(), fit.iterations);
        let gap = fit.objective - fit.smoothed_objective;
        prop_assert!(gap >= -1e-9 * fit.objective && gap <= mu * map.d() + 1e-9 * fit.objective);
        let again = eval_objective(&problem, &map, &fit.beta, lambda).unwrap();
        prop_assert!((again - fit.objective).abs() <= 1e-12 * fit.objective.max(1.0));
        let zero = eval_objective(&problem, &map, &Array1::zeros(j), lambda).unwrap();
        prop_assert!(fit.objective <= zero * (1.0 + 1e-12));
    }

    #[test]
    fn multitask_result_invariants(seed in any::<u64>(), j in 2usize..8, k in 2usize..5) {
        let mut r = rng(seed);
        let x = Array2::from_shape_fn((12, j), |_| r.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((12, k), |_| r.random_range(-1.0..1.0));
        let problem = MultiTaskProblem::new(x, y, false).unwrap();
        let info = MultiTaskMapInfo::new(any_map(&mut r, k, 0.7), j);
        let cfg = SolverConfig { record_trace: true, max_iter: 400, ..SolverConfig::with_lambda(0.3) };
        let fit = spg_solve_mt(&problem, &info, &cfg).unwrap();
        prop_assert_eq!(fit.beta.dim(), (j, k));
        prop_assert_eq!(fit.trace.as_ref().unwrap().len(), fit.iterations);
        let again = eval_objective_mt(&problem, info.base(), &fit.beta, 0.3).unwrap();
        prop_assert!((again - fit.objective).abs() <= 1e-12 * fit.objective.max(1.0));
        let gap = fit.objective - fit.smoothed_objective;
        prop_assert!(gap >= -1e-9 * fit.objective && gap <= fit.mu.unwrap() * info.d_mt() + 1e-9 * fit.objective);
    }
}
