//! Independent checks: finite differences, a brute-force 1-D prox, and a
//! slow high-accuracy reference solver for tiny problems.
//!
//! The reference deliberately mixes method families. A long run of
//! subgradient descent with Polyak-type steps and iterate averaging does the
//! bulk of the work; a short smoothing-solver polish at a far smaller μ than
//! the production default refines it.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{l1_norm, sign};
use crate::model::{eval_objective, MultiTaskProblem, RegressionProblem, Smoothing, SolverConfig};
use crate::multitask::MultiTaskMapInfo;
use crate::penalty::PenaltyLinearMap;
use crate::solver::spg_solve_warm;

pub const REFERENCE_MAX_DIM: usize = 100;
pub const REFERENCE_MIN_BUDGET: usize = 100_000;
pub const POLISH_MU: f64 = 1e-8;
pub const POLISH_ITERATIONS: usize = 10_000;

/// Central differences `(f(β + h e_j) − f(β − h e_j)) / 2h`.
pub fn fd_gradient<F>(f: F, beta: &Array1<f64>, h: f64) -> Result<Array1<f64>>
where
    F: Fn(&Array1<f64>) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {h}")));
    }
    let mut point = beta.clone();
    let mut grad = Array1::zeros(beta.len());
    for j in 0..beta.len() {
        let orig = point[j];
        point[j] = orig + h;
        let up = f(&point);
        point[j] = orig - h;
        let down = f(&point);
        point[j] = orig;
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "function not finite near coordinate {}",
                j + 1
            )));
        }
        grad[j] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Minimiser of `½(x − v)² + t|x|` over `resolution + 1` evenly spaced points
/// of `[−|v| − t, |v| + t]`.
pub fn prox_1d_grid(v: f64, t: f64, resolution: usize) -> f64 {
    let half = v.abs() + t;
    if half == 0.0 || resolution == 0 {
        return 0.0;
    }
    let step = 2.0 * half / resolution as f64;
    let mut best_x = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..=resolution {
        let x = -half + step * i as f64;
        let val = 0.5 * (x - v) * (x - v) + t * x.abs();
        if val < best {
            best = val;
            best_x = x;
        }
    }
    best_x
}

/// High-accuracy solution of `min ½‖y − Xβ‖² + Ω(β) + λ‖β‖₁` for `J ≤ 100`.
///
/// Returns the better of the subgradient phase (best raw iterate or the
/// tail average) and the polished point, with its objective.
pub fn reference_solve(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    lambda: f64,
    budget: usize,
) -> Result<(Array1<f64>, f64)> {
    let j = problem.j();
    if j > REFERENCE_MAX_DIM {
        return Err(Error::OracleGuard(format!(
            "reference solver limited to J <= {REFERENCE_MAX_DIM}, got {j}"
        )));
    }
    if budget < REFERENCE_MIN_BUDGET {
        return Err(Error::OracleGuard(format!(
            "budget must be at least {REFERENCE_MIN_BUDGET}, got {budget}"
        )));
    }
    if map.dim() != j {
        return Err(Error::dims("penalty map dimension vs columns of X", j, map.dim()));
    }
    let problem = problem.clone().with_precompute();
    let objective = |b: &Array1<f64>| problem.loss(b) + map.penalty_at(b.view()) + lambda * l1_norm(b.view());

    // Phase 1: subgradient with Polyak steps toward a shrinking target below
    // the best value seen.
    let mut beta = Array1::<f64>::zeros(j);
    let mut f = objective(&beta);
    let mut best = beta.clone();
    let mut best_f = f;
    let mut avg = Array1::<f64>::zeros(j);
    let mut avg_count = 0usize;
    let tail_start = budget / 2;
    let delta0 = 0.1 * f.max(1e-12);
    for t in 0..budget {
        let mut g = problem.loss_gradient(&beta);
        if map.rows() > 0 {
            g += &crate::baselines::penalty_subgradient(map, &beta)?;
        }
        g.zip_mut_with(&beta, |gi, &b| *gi += lambda * sign(b));
        let gnorm2 = g.dot(&g);
        if gnorm2 == 0.0 {
            break;
        }
        let delta = delta0 / (t as f64 + 1.0);
        let step = (f - best_f + delta) / gnorm2;
        beta.scaled_add(-step, &g);
        f = objective(&beta);
        if f < best_f {
            best_f = f;
            best.assign(&beta);
        }
        if t >= tail_start {
            avg_count += 1;
            avg.scaled_add(1.0, &beta);
        }
    }
    if avg_count > 0 {
        avg /= avg_count as f64;
        let fa = objective(&avg);
        if fa < best_f {
            best_f = fa;
            best = avg;
        }
    }

    // Phase 2: smoothing-solver polish from the phase-1 point.
    let config = SolverConfig {
        lambda,
        gamma: None,
        smoothing: Smoothing::Mu(POLISH_MU),
        tol: 0.0,
        max_iter: POLISH_ITERATIONS,
        target_objective: None,
        precompute_gram: true,
        record_trace: false,
        lipschitz_scale: 1.0,
    };
    if let Ok(polished) = spg_solve_warm(&problem, map, &config, Some(&best)) {
        let fp = eval_objective(&problem, map, &polished.beta, lambda)?;
        if fp < best_f {
            best_f = fp;
            best = polished.beta;
        }
    }
    Ok((best, best_f))
}

/// [`reference_solve`] on the stacked single-task form; needs `J·K ≤ 100`.
pub fn reference_solve_mt(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    lambda: f64,
    budget: usize,
) -> Result<(Array2<f64>, f64)> {
    let (j, k) = (problem.j(), problem.k());
    if j * k > REFERENCE_MAX_DIM {
        return Err(Error::OracleGuard(format!(
            "reference solver limited to J*K <= {REFERENCE_MAX_DIM}, got {}",
            j * k
        )));
    }
    if info.tasks() != k || info.coef_rows() != j {
        return Err(Error::dims("multi-task map tasks vs columns of Y", k, info.tasks()));
    }
    let stacked = problem.stacked()?;
    let (vec_b, f) = reference_solve(&stacked, &info.stacked_map(), lambda, budget)?;
    let b = Array2::from_shape_fn((j, k), |(r, c)| vec_b[c * j + r]);
    Ok((b, f))
}

/// Closed-form least squares `β = (XᵀX)⁻¹Xᵀy` by Gaussian elimination with
/// partial pivoting; a test oracle for well-conditioned `J ≤ 100` designs.
pub fn least_squares(problem: &RegressionProblem) -> Result<Array1<f64>> {
    let x = problem.x();
    let mut a = x.t().dot(&x);
    let mut b = x.t().dot(&problem.y());
    let n = a.nrows();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[[p, col]].abs().total_cmp(&a[[q, col]].abs()))
            .unwrap_or(col);
        if a[[pivot, col]].abs() < 1e-300 {
            return Err(Error::InvalidStructure("XᵀX is singular".into()));
        }
        if pivot != col {
            for c in 0..n {
                a.swap([pivot, c], [col, c]);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..n {
            let factor = a[[r, col]] / a[[col, col]];
            if factor != 0.0 {
                for c in col..n {
                    a[[r, c]] -= factor * a[[col, c]];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut out = Array1::zeros(n);
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[[r, c]] * out[c];
        }
        out[r] = s / a[[r, r]];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn fd_of_quadratic() {
        let g = fd_gradient(|b| 0.5 * b.dot(b), &array![1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
        let g = fd_gradient(|_| 3.0, &array![1.0, 2.0, 3.0], 1e-5).unwrap();
        assert_eq!(g, Array1::<f64>::zeros(3));
        assert!(fd_gradient(|_| f64::NAN, &array![1.0], 1e-5).is_err());
    }

    #[test]
    fn grid_prox_examples() {
        let res = 200_000;
        assert!((prox_1d_grid(2.0, 0.5, res) - 1.5).abs() <= 5.0 / res as f64);
        assert!(prox_1d_grid(0.3, 0.5, res).abs() <= 1.6 / res as f64);
        assert!((prox_1d_grid(-0.7, 0.0, res) + 0.7).abs() <= 1.4 / res as f64);
    }

    #[test]
    fn guards() {
        let p = RegressionProblem::new(Array2::eye(3), array![1.0, 2.0, 3.0], false).unwrap();
        let map = PenaltyLinearMap::empty(3);
        assert!(matches!(reference_solve(&p, &map, 0.0, 10), Err(Error::OracleGuard(_))));
        let big = RegressionProblem::new(Array2::eye(101), Array1::zeros(101), false).unwrap();
        assert!(reference_solve(&big, &PenaltyLinearMap::empty(101), 0.0, REFERENCE_MIN_BUDGET).is_err());
    }
}
