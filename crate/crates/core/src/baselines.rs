//! Comparison methods with a `c/√t` step: forward-backward splitting (FOBOS)
//! on the loss `g + Ω` with an ℓ1 prox, and plain subgradient descent.
//!
//! Neither is a descent method, so results carry the best iterate seen.

use std::borrow::Cow;

use ndarray::{Array, Array1, Array2, Dimension, Ix1, Ix2, Zip};
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::linalg::{l1_norm, sign};
use crate::model::{
    MultiTaskProblem, MultiTaskSolveResult, RegressionProblem, SolveResult, TracePoint, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::multitask::MultiTaskMapInfo;
use crate::penalty::{DualBall, PenaltyLinearMap};
use crate::solver::{check_growth, soft_threshold_inplace, stop_reached};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Step scale `c`; `None` selects `0.1/√(NJ)` (single-task) or
    /// `0.1/√(NJK)` (multi-task).
    pub step_c: Option<f64>,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    /// As [`crate::model::SolverConfig::target_objective`].
    #[serde(default)]
    pub target_objective: Option<f64>,
    pub record_trace: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            step_c: None,
            lambda: 0.0,
            gamma: None,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            target_objective: None,
            record_trace: false,
        }
    }
}

impl BaselineConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        BaselineConfig { lambda, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if let Some(c) = self.step_c {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidConfig(format!("step scale must be positive, got {c}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {g}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if self.target_objective.is_some_and(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("target objective must be finite".into()));
        }
        Ok(())
    }
}

/// Default FOBOS step scale `0.1/√(N·J·K)` (`K = 1` for a single task).
pub fn default_step_scale(n: usize, j: usize, k: usize) -> f64 {
    0.1 / ((n * j * k) as f64).sqrt()
}

/// An element of `∂Ω(β)`: `Cᵀs` with `s` the normalised block of `Cβ`
/// (zero for a zero block) or `sign(Cβ)` for the box.
pub fn penalty_subgradient(map: &PenaltyLinearMap, beta: &Array1<f64>) -> Result<Array1<f64>> {
    if beta.len() != map.dim() {
        return Err(Error::dims("coefficient vector vs penalty map", map.dim(), beta.len()));
    }
    Ok(subgradient_unchecked(map, beta.view()))
}

fn subgradient_unchecked(map: &PenaltyLinearMap, beta: ndarray::ArrayView1<f64>) -> Array1<f64> {
    let mut s = map.apply(beta);
    match map.ball() {
        DualBall::Box => s.mapv_inplace(sign),
        DualBall::Blocks(lens) => {
            let v = s.as_slice_mut().expect("contiguous");
            let mut start = 0;
            for &len in lens {
                let block = &mut v[start..start + len];
                let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    block.iter_mut().for_each(|x| *x /= norm);
                }
                start += len;
            }
        }
    }
    map.apply_transpose(s.view())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Fobos,
    Subgradient,
}

trait NonsmoothProblem<D: Dimension> {
    /// `∇g(β) + s`, `s ∈ ∂Ω(β)`.
    fn subgradient(&self, beta: &Array<f64, D>) -> Array<f64, D>;
    fn objective(&self, beta: &Array<f64, D>) -> f64;
}

struct Outcome<D: Dimension> {
    best: Array<f64, D>,
    best_objective: f64,
    iterations: usize,
    converged: bool,
    trace: Option<Vec<TracePoint>>,
    wall_seconds: f64,
}

fn run<D, P>(problem: &P, start: Array<f64, D>, c: f64, cfg: &BaselineConfig, rule: Rule) -> Result<Outcome<D>>
where
    D: Dimension,
    P: NonsmoothProblem<D>,
{
    let clock = Stopwatch::start();
    let mut beta = start;
    let f0 = problem.objective(&beta);
    check_growth(0, f0, f0)?;
    let mut f = f0;
    let mut best = beta.clone();
    let mut best_objective = f0;
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=cfg.max_iter {
        let eta = c / (t as f64).sqrt();
        let g = problem.subgradient(&beta);
        match rule {
            Rule::Fobos => {
                Zip::from(&mut beta).and(&g).for_each(|b, &gi| *b -= eta * gi);
                soft_threshold_inplace(&mut beta, eta * cfg.lambda);
            }
            Rule::Subgradient => {
                Zip::from(&mut beta)
                    .and(&g)
                    .for_each(|b, &gi| *b -= eta * (gi + cfg.lambda * sign(*b)));
            }
        }
        let prev = f;
        f = problem.objective(&beta);
        iterations = t;
        check_growth(t, f, f0)?;
        if f < best_objective {
            best_objective = f;
            best.assign(&beta);
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(TracePoint { objective: f, smoothed_objective: f });
        }
        if stop_reached(prev, f, cfg.tol, cfg.target_objective) {
            converged = true;
            break;
        }
    }
    Ok(Outcome {
        best,
        best_objective,
        iterations,
        converged,
        trace,
        wall_seconds: clock.seconds(),
    })
}

struct Single<'a> {
    problem: &'a RegressionProblem,
    map: &'a PenaltyLinearMap,
    lambda: f64,
}

impl NonsmoothProblem<Ix1> for Single<'_> {
    fn subgradient(&self, beta: &Array1<f64>) -> Array1<f64> {
        let mut g = self.problem.loss_gradient(beta);
        if self.map.rows() > 0 {
            g += &subgradient_unchecked(self.map, beta.view());
        }
        g
    }

    fn objective(&self, beta: &Array1<f64>) -> f64 {
        self.problem.loss(beta)
            + self.map.penalty_at(beta.view())
            + self.lambda * l1_norm(beta.view())
    }
}

struct Multi<'a> {
    problem: &'a MultiTaskProblem,
    map: &'a PenaltyLinearMap,
    lambda: f64,
}

impl NonsmoothProblem<Ix2> for Multi<'_> {
    fn subgradient(&self, b: &Array2<f64>) -> Array2<f64> {
        let mut g = self.problem.loss_gradient(b);
        if self.map.rows() > 0 {
            Zip::from(g.rows_mut()).and(b.rows()).for_each(|mut gr, br| {
                gr += &subgradient_unchecked(self.map, br);
            });
        }
        g
    }

    fn objective(&self, b: &Array2<f64>) -> f64 {
        let penalty: f64 = b.rows().into_iter().map(|r| self.map.penalty_at(r)).sum();
        let l1: f64 = b.iter().map(|v| v.abs()).sum();
        self.problem.loss(b) + penalty + self.lambda * l1
    }
}

fn gamma_map<'a>(map: &'a PenaltyLinearMap, cfg: &BaselineConfig) -> Cow<'a, PenaltyLinearMap> {
    match cfg.gamma {
        Some(g) if g != map.gamma() => Cow::Owned(map.with_gamma(g)),
        _ => Cow::Borrowed(map),
    }
}

fn solve_single(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    cfg: &BaselineConfig,
    rule: Rule,
) -> Result<SolveResult> {
    cfg.validate()?;
    if map.dim() != problem.j() {
        return Err(Error::dims("penalty map dimension vs columns of X", problem.j(), map.dim()));
    }
    let map = gamma_map(map, cfg);
    let c = cfg.step_c.unwrap_or_else(|| default_step_scale(problem.n(), problem.j(), 1));
    let p = Single { problem, map: &map, lambda: cfg.lambda };
    let out = run(&p, Array1::zeros(problem.j()), c, cfg, rule)?;
    Ok(SolveResult {
        beta: out.best,
        objective: out.best_objective,
        smoothed_objective: out.best_objective,
        iterations: out.iterations,
        converged: out.converged,
        trace: out.trace,
        wall_seconds: out.wall_seconds,
        mu: None,
        lipschitz: None,
    })
}

fn solve_multi(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    cfg: &BaselineConfig,
    rule: Rule,
) -> Result<MultiTaskSolveResult> {
    cfg.validate()?;
    if info.tasks() != problem.k() || info.coef_rows() != problem.j() {
        return Err(Error::dims("multi-task map tasks vs columns of Y", problem.k(), info.tasks()));
    }
    let map = gamma_map(info.base(), cfg);
    let c = cfg
        .step_c
        .unwrap_or_else(|| default_step_scale(problem.n(), problem.j(), problem.k()));
    let p = Multi { problem, map: &map, lambda: cfg.lambda };
    let out = run(&p, Array2::zeros((problem.j(), problem.k())), c, cfg, rule)?;
    Ok(MultiTaskSolveResult {
        beta: out.best,
        objective: out.best_objective,
        smoothed_objective: out.best_objective,
        iterations: out.iterations,
        converged: out.converged,
        trace: out.trace,
        wall_seconds: out.wall_seconds,
        mu: None,
        lipschitz: None,
    })
}

/// `β ← soft(β − η_t(∇g(β) + s), η_t λ)` with `η_t = c/√t`.
pub fn fobos_solve(problem: &RegressionProblem, map: &PenaltyLinearMap, cfg: &BaselineConfig) -> Result<SolveResult> {
    solve_single(problem, map, cfg, Rule::Fobos)
}

/// `β ← β − η_t(∇g(β) + s + λ·sign(β))` with `η_t = c/√t`.
pub fn subgradient_solve(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    cfg: &BaselineConfig,
) -> Result<SolveResult> {
    solve_single(problem, map, cfg, Rule::Subgradient)
}

pub fn fobos_solve_mt(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    cfg: &BaselineConfig,
) -> Result<MultiTaskSolveResult> {
    solve_multi(problem, info, cfg, Rule::Fobos)
}

pub fn subgradient_solve_mt(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    cfg: &BaselineConfig,
) -> Result<MultiTaskSolveResult> {
    solve_multi(problem, info, cfg, Rule::Subgradient)
}
