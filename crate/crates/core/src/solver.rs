//! Smoothing proximal gradient: FISTA on `g(β) + f_μ(β) + λ‖β‖₁`.
//!
//! Each iteration takes a gradient step on the smooth part
//! `h = g + f_μ` from the extrapolated point `w`, soft-thresholds with
//! `λ/L`, and extrapolates with `θ_t = 2/(t+2)`. Stopping looks at the
//! relative change of the original objective `f`, never `f̃`.

use std::borrow::Cow;

use ndarray::{Array, Array1, ArrayView1, ArrayView2, Dimension, Zip};

use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::linalg::{l1_norm, power_iteration, POWER_MAX_ITER};
use crate::model::{RegressionProblem, Smoothing, SolveResult, SolverConfig, TracePoint};
use crate::penalty::PenaltyLinearMap;

/// Relative tolerance for the largest eigenvalue of `XᵀX`.
pub const LOSS_LIPSCHITZ_TOL: f64 = 1e-8;

/// Objective growth factor (over the starting value) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// `μ = ε / (2D)`.
pub fn mu_from_epsilon(epsilon: f64, d: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(
            "the penalty has nothing to smooth (D = 0); set mu explicitly".into(),
        ));
    }
    Ok(epsilon / (2.0 * d))
}

/// `sign(v_j)·max(0, |v_j| − t)`; thresholded entries are exactly `+0.0`.
pub fn soft_threshold(v: ArrayView1<f64>, t: f64) -> Array1<f64> {
    let mut out = v.to_owned();
    soft_threshold_inplace(&mut out, t);
    out
}

pub(crate) fn soft_threshold_inplace<D: Dimension>(v: &mut Array<f64, D>, t: f64) {
    v.mapv_inplace(|x| {
        if x.abs() <= t {
            0.0
        } else if x > 0.0 {
            x - t
        } else {
            x + t
        }
    });
}

pub(crate) fn design_lipschitz(x: ArrayView2<f64>, gram: Option<&ndarray::Array2<f64>>) -> f64 {
    let dim = x.ncols();
    match gram {
        Some(g) => power_iteration(dim, LOSS_LIPSCHITZ_TOL, POWER_MAX_ITER, |v| g.dot(v)),
        None => power_iteration(dim, LOSS_LIPSCHITZ_TOL, POWER_MAX_ITER, |v| x.t().dot(&x.dot(v))),
    }
}

/// `λ_max(XᵀX)`, the Lipschitz constant of the squared-loss gradient.
pub fn loss_lipschitz(problem: &RegressionProblem) -> f64 {
    design_lipschitz(problem.x(), problem.gram())
}

/// The pieces of `f̃` that FISTA needs, for vectors or matrices.
pub(crate) trait SmoothComposite<D: Dimension> {
    /// `∇h(w)`.
    fn gradient(&self, w: &Array<f64, D>) -> Array<f64, D>;
    /// `(f(β), f̃(β))`, both including `λ‖β‖₁`.
    fn objectives(&self, beta: &Array<f64, D>) -> (f64, f64);
}

pub(crate) struct LoopSettings {
    pub lipschitz: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub target: Option<f64>,
    pub record_trace: bool,
}

pub(crate) struct LoopOutcome<D: Dimension> {
    pub beta: Array<f64, D>,
    pub objective: f64,
    pub smoothed: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Option<Vec<TracePoint>>,
    pub wall_seconds: f64,
}

/// `|f − f_prev| / |f_prev| < tol`, with two zero objectives counted as converged.
pub(crate) fn relative_change_below(prev: f64, cur: f64, tol: f64) -> bool {
    if prev == 0.0 {
        cur == 0.0
    } else {
        (cur - prev).abs() / prev.abs() < tol
    }
}

/// The target objective when one is set, the relative-change rule otherwise.
pub(crate) fn stop_reached(prev: f64, cur: f64, tol: f64, target: Option<f64>) -> bool {
    match target {
        Some(t) => cur <= t,
        None => relative_change_below(prev, cur, tol),
    }
}

pub(crate) fn check_growth(iteration: usize, value: f64, start: f64) -> Result<()> {
    if !value.is_finite() || value > DIVERGENCE_FACTOR * start.max(f64::MIN_POSITIVE) {
        return Err(Error::Diverged { iteration, value });
    }
    Ok(())
}

pub(crate) fn run_fista<D, P>(problem: &P, beta0: Array<f64, D>, s: &LoopSettings) -> Result<LoopOutcome<D>>
where
    D: Dimension,
    P: SmoothComposite<D>,
{
    let clock = Stopwatch::start();
    let step = 1.0 / s.lipschitz;
    let threshold = s.lambda * step;

    let (f0, ft0) = problem.objectives(&beta0);
    check_growth(0, f0, f0)?;
    let mut beta = beta0.clone();
    let mut w = beta0;
    let mut theta = 1.0;
    let (mut f, mut ft) = (f0, ft0);
    let mut trace = s.record_trace.then(Vec::new);
    let mut iterations = 0;
    let mut converged = false;

    for t in 0..s.max_iter {
        let grad = problem.gradient(&w);
        let mut next = w;
        Zip::from(&mut next).and(&grad).for_each(|b, &g| *b -= step * g);
        soft_threshold_inplace(&mut next, threshold);

        let theta_next = 2.0 / (t as f64 + 3.0);
        let momentum = (1.0 - theta) / theta * theta_next;
        w = next.clone();
        Zip::from(&mut w)
            .and(&next)
            .and(&beta)
            .for_each(|wi, &n, &b| *wi += momentum * (n - b));
        beta = next;
        theta = theta_next;

        let prev = f;
        (f, ft) = problem.objectives(&beta);
        iterations = t + 1;
        check_growth(iterations, f, f0)?;
        if let Some(tr) = trace.as_mut() {
            tr.push(TracePoint { objective: f, smoothed_objective: ft });
        }
        if stop_reached(prev, f, s.tol, s.target) {
            converged = true;
            break;
        }
    }

    Ok(LoopOutcome {
        beta,
        objective: f,
        smoothed: ft,
        iterations,
        converged,
        trace,
        wall_seconds: clock.seconds(),
    })
}

struct SingleTask<'a> {
    problem: &'a RegressionProblem,
    map: &'a PenaltyLinearMap,
    mu: f64,
    lambda: f64,
}

impl SmoothComposite<ndarray::Ix1> for SingleTask<'_> {
    fn gradient(&self, w: &Array1<f64>) -> Array1<f64> {
        let mut g = self.problem.loss_gradient(w);
        if self.map.rows() > 0 {
            g += &self.map.smoothed_gradient(w.view(), self.mu);
        }
        g
    }

    fn objectives(&self, beta: &Array1<f64>) -> (f64, f64) {
        let base = self.problem.loss(beta) + self.lambda * l1_norm(beta.view());
        let (exact, smooth) = self.map.exact_and_smoothed(beta.view(), self.mu);
        (base + exact, base + smooth)
    }
}

/// Resolves the map at the configured γ and the smoothing parameter.
pub(crate) fn resolve_map<'a>(
    map: &'a PenaltyLinearMap,
    config: &SolverConfig,
    d_override: Option<f64>,
) -> Result<(Cow<'a, PenaltyLinearMap>, f64)> {
    config.validate()?;
    let map = match config.gamma {
        Some(g) if g != map.gamma() => Cow::Owned(map.with_gamma(g)),
        _ => Cow::Borrowed(map),
    };
    let mu = match config.smoothing {
        Smoothing::Mu(m) => m,
        Smoothing::Epsilon(e) => mu_from_epsilon(e, d_override.unwrap_or_else(|| map.d()))?,
    };
    Ok((map, mu))
}

pub(crate) fn total_lipschitz(loss: f64, map: &PenaltyLinearMap, mu: f64, scale: f64) -> f64 {
    let norm = map.norm().value();
    let l = (loss + norm * norm / mu) * scale;
    if l > 0.0 {
        l
    } else {
        1.0
    }
}

/// Solves from `β⁰ = 0`.
pub fn spg_solve(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    config: &SolverConfig,
) -> Result<SolveResult> {
    spg_solve_warm(problem, map, config, None)
}

/// Solves from a caller-supplied starting point (zero when `None`).
pub fn spg_solve_warm(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    config: &SolverConfig,
    beta0: Option<&Array1<f64>>,
) -> Result<SolveResult> {
    let j = problem.j();
    if map.dim() != j {
        return Err(Error::dims("penalty map dimension vs columns of X", j, map.dim()));
    }
    let start = match beta0 {
        Some(b) if b.len() != j => return Err(Error::dims("warm start length", j, b.len())),
        Some(b) => b.clone(),
        None => Array1::zeros(j),
    };
    let (map, mu) = resolve_map(map, config, None)?;
    let problem = if config.precompute_gram && problem.gram().is_none() {
        Cow::Owned(problem.clone().with_precompute())
    } else {
        Cow::Borrowed(problem)
    };
    let lipschitz = total_lipschitz(loss_lipschitz(&problem), &map, mu, config.lipschitz_scale);
    let composite = SingleTask {
        problem: &problem,
        map: &map,
        mu,
        lambda: config.lambda,
    };
    let settings = LoopSettings {
        lipschitz,
        lambda: config.lambda,
        tol: config.tol,
        max_iter: config.max_iter,
        target: config.target_objective,
        record_trace: config.record_trace,
    };
    let out = run_fista(&composite, start, &settings)?;
    Ok(SolveResult {
        beta: out.beta,
        objective: out.objective,
        smoothed_objective: out.smoothed,
        iterations: out.iterations,
        converged: out.converged,
        trace: out.trace,
        wall_seconds: out.wall_seconds,
        mu: Some(mu),
        lipschitz: Some(lipschitz),
    })
}

/// Solves along a sequence of configurations, each warm-started from the
/// previous solution. Order the sequence from strongest to weakest
/// regularization.
pub fn solve_path(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    configs: &[SolverConfig],
) -> Result<Vec<SolveResult>> {
    let mut out: Vec<SolveResult> = Vec::with_capacity(configs.len());
    for config in configs {
        let warm = out.last().map(|r| r.beta.clone());
        out.push(spg_solve_warm(problem, map, config, warm.as_ref())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Group, GroupStructure};
    use crate::penalty::build_group_map;
    use ndarray::{array, Array2};

    #[test]
    fn mu_from_epsilon_examples() {
        assert!((mu_from_epsilon(0.01, 5.0).unwrap() - 0.001).abs() < 1e-18);
        assert_eq!(mu_from_epsilon(1.0, 0.5).unwrap(), 1.0);
        for d in [0.5, 5.0, 50.0] {
            assert!((mu_from_epsilon(2e-4 * d, d).unwrap() - 1e-4).abs() < 1e-18);
        }
        assert!(mu_from_epsilon(1.0, 0.0).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        let out = soft_threshold(array![2.0, -2.0, 0.3].view(), 0.5);
        assert_eq!(out, array![1.5, -1.5, 0.0]);
        assert_eq!(out[2].to_bits(), 0.0f64.to_bits());
        let v = array![0.1, -7.0, 3.25];
        assert_eq!(soft_threshold(v.view(), 0.0), v);
    }

    #[test]
    fn lipschitz_small_cases() {
        let p = RegressionProblem::new(Array2::eye(3), Array1::zeros(3), false).unwrap();
        assert!((loss_lipschitz(&p) - 1.0).abs() < 1e-12);
        let p = RegressionProblem::new(array![[3.0]], array![1.0], false).unwrap();
        assert!((loss_lipschitz(&p) - 9.0).abs() < 1e-12);
        let p = RegressionProblem::new(Array2::zeros((2, 2)), Array1::zeros(2), false).unwrap();
        assert_eq!(loss_lipschitz(&p), 0.0);
    }

    #[test]
    fn theta_schedule_first_step_has_no_momentum() {
        // one iteration from zero is a plain proximal gradient step
        let p = RegressionProblem::new(Array2::eye(2), array![3.0, -0.2], false).unwrap();
        let map = PenaltyLinearMap::empty(2);
        let cfg = SolverConfig { max_iter: 1, ..SolverConfig::with_lambda(0.5) };
        let r = spg_solve(&p, &map, &cfg).unwrap();
        assert!((r.beta[0] - 2.5).abs() < 1e-12);
        assert_eq!(r.beta[1], 0.0);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn orthogonal_lasso_closed_form() {
        let p = RegressionProblem::new(Array2::eye(3), array![3.0, -0.2, -1.5], false).unwrap();
        let map = PenaltyLinearMap::empty(3);
        let cfg = SolverConfig { tol: 0.0, max_iter: 50, ..SolverConfig::with_lambda(0.5) };
        let r = spg_solve(&p, &map, &cfg).unwrap();
        assert_eq!(r.beta, array![2.5, 0.0, -1.0]);
    }

    #[test]
    fn rejects_mismatched_map() {
        let p = RegressionProblem::new(Array2::eye(2), array![1.0, 1.0], false).unwrap();
        let g = GroupStructure::new(3, vec![Group { members: vec![0, 2], weight: 1.0 }]).unwrap();
        let map = build_group_map(&g, 1.0).unwrap();
        assert!(spg_solve(&p, &map, &SolverConfig::default()).is_err());
    }

    #[test]
    fn epsilon_without_structure_is_an_error() {
        let p = RegressionProblem::new(Array2::eye(2), array![1.0, 1.0], false).unwrap();
        let cfg = SolverConfig { smoothing: Smoothing::Epsilon(1e-2), ..Default::default() };
        assert!(spg_solve(&p, &PenaltyLinearMap::empty(2), &cfg).is_err());
    }

    #[test]
    fn divergence_guard_trips_on_bad_step() {
        let x = Array2::from_shape_fn((6, 3), |(i, j)| 1.0 + ((i + 2 * j) as f64).cos());
        let p = RegressionProblem::new(x, array![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], false).unwrap();
        let cfg = SolverConfig { lipschitz_scale: 0.05, ..Default::default() };
        let err = spg_solve(&p, &PenaltyLinearMap::empty(3), &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }
}
