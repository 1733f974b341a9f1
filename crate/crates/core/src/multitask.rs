//! Structured penalties over tasks for `Y = XB + E`.
//!
//! The base map `C` lives over the K tasks and is applied to every row of
//! `B` independently, so `Ω(B) = max_{A ∈ Q} ⟨CBᵀ, A⟩` with `Q` the J-fold
//! product of the base dual domain. The maximiser is obtained column by
//! column of `CBᵀ/μ` and the gradient is `(A*)ᵀC`.

use std::borrow::Cow;

use ndarray::{Array2, Ix2, Zip};

use crate::error::{Error, Result};
use crate::model::{MultiTaskProblem, MultiTaskSolveResult, SolverConfig};
use crate::penalty::PenaltyLinearMap;
use crate::solver::{design_lipschitz, resolve_map, run_fista, total_lipschitz, LoopSettings, SmoothComposite};

/// A task-space penalty map applied to the `J` coefficient rows of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskMapInfo {
    base: PenaltyLinearMap,
    coef_rows: usize,
    d_mt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskPenaltyEval {
    pub value: f64,
    /// `(A*)ᵀC`, J×K.
    pub gradient: Array2<f64>,
    /// `A*`, rows(C)×J.
    pub alpha: Array2<f64>,
}

impl MultiTaskMapInfo {
    pub fn new(base: PenaltyLinearMap, coef_rows: usize) -> Self {
        let d_mt = coef_rows as f64 * base.d();
        MultiTaskMapInfo { base, coef_rows, d_mt }
    }

    pub fn base(&self) -> &PenaltyLinearMap {
        &self.base
    }

    pub fn coef_rows(&self) -> usize {
        self.coef_rows
    }

    pub fn tasks(&self) -> usize {
        self.base.dim()
    }

    /// `J · D` of the base map.
    pub fn d_mt(&self) -> f64 {
        self.d_mt
    }

    /// The equivalent single-task map over `vec(B)` (see
    /// [`MultiTaskProblem::stacked`]).
    pub fn stacked_map(&self) -> PenaltyLinearMap {
        self.base.kron_identity(self.coef_rows)
    }

    fn check(&self, b: &Array2<f64>) -> Result<()> {
        if b.dim() != (self.coef_rows, self.tasks()) {
            let found = if b.nrows() != self.coef_rows { b.nrows() } else { b.ncols() };
            let expected = if b.nrows() != self.coef_rows { self.coef_rows } else { self.tasks() };
            return Err(Error::dims("shape of B vs multi-task map", expected, found));
        }
        Ok(())
    }

    /// `Σ_j Ω(B_j·)`.
    pub fn exact_penalty(&self, b: &Array2<f64>) -> Result<f64> {
        self.check(b)?;
        let mut total = 0.0;
        for row in b.rows() {
            total += self.base.exact_penalty(&row.to_owned())?;
        }
        Ok(total)
    }
}

/// `f_μ(B)`, `(A*)ᵀC` and `A*`.
pub fn smoothed_eval_mt(info: &MultiTaskMapInfo, b: &Array2<f64>, mu: f64) -> Result<MultiTaskPenaltyEval> {
    info.check(b)?;
    let mut value = 0.0;
    let mut gradient = Array2::zeros(b.dim());
    let mut alpha = Array2::zeros((info.base.rows(), info.coef_rows));
    for (j, row) in b.rows().into_iter().enumerate() {
        let e = info.base.smoothed_eval(&row.to_owned(), mu)?;
        value += e.value;
        gradient.row_mut(j).assign(&e.gradient);
        alpha.column_mut(j).assign(&e.alpha);
    }
    Ok(MultiTaskPenaltyEval { value, gradient, alpha })
}

struct MultiTask<'a> {
    problem: &'a MultiTaskProblem,
    map: &'a PenaltyLinearMap,
    mu: f64,
    lambda: f64,
}

impl SmoothComposite<Ix2> for MultiTask<'_> {
    fn gradient(&self, w: &Array2<f64>) -> Array2<f64> {
        let mut g = self.problem.loss_gradient(w);
        if self.map.rows() > 0 {
            Zip::from(g.rows_mut()).and(w.rows()).for_each(|mut gr, wr| {
                gr += &self.map.smoothed_gradient(wr, self.mu);
            });
        }
        g
    }

    fn objectives(&self, b: &Array2<f64>) -> (f64, f64) {
        let l1: f64 = b.iter().map(|v| v.abs()).sum();
        let base = self.problem.loss(b) + self.lambda * l1;
        let (mut exact, mut smooth) = (0.0, 0.0);
        for row in b.rows() {
            let (e, s) = self.map.exact_and_smoothed(row, self.mu);
            exact += e;
            smooth += s;
        }
        (base + exact, base + smooth)
    }
}

pub fn spg_solve_mt(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    config: &SolverConfig,
) -> Result<MultiTaskSolveResult> {
    spg_solve_mt_warm(problem, info, config, None)
}

/// Algorithm as in [`crate::solver::spg_solve_warm`] with matrix iterates;
/// `L = λ_max(XᵀX) + ‖C‖²/μ` and `μ = ε/(2·J·D)` when ε is given.
pub fn spg_solve_mt_warm(
    problem: &MultiTaskProblem,
    info: &MultiTaskMapInfo,
    config: &SolverConfig,
    b0: Option<&Array2<f64>>,
) -> Result<MultiTaskSolveResult> {
    if info.tasks() != problem.k() {
        return Err(Error::dims("multi-task map tasks vs columns of Y", problem.k(), info.tasks()));
    }
    if info.coef_rows() != problem.j() {
        return Err(Error::dims("multi-task map rows vs columns of X", problem.j(), info.coef_rows()));
    }
    let start = match b0 {
        Some(b) => {
            info.check(b)?;
            b.clone()
        }
        None => Array2::zeros((problem.j(), problem.k())),
    };
    let (map, mu) = resolve_map(&info.base, config, Some(info.d_mt))?;
    let problem = if config.precompute_gram && problem.gram().is_none() {
        let mut p = problem.clone();
        p.precompute();
        Cow::Owned(p)
    } else {
        Cow::Borrowed(problem)
    };
    let loss_l = design_lipschitz(problem.x(), problem.gram());
    let lipschitz = total_lipschitz(loss_l, &map, mu, config.lipschitz_scale);
    let composite = MultiTask {
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
    Ok(MultiTaskSolveResult {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, FusionGraph, Group, GroupStructure};
    use crate::penalty::{build_fusion_map, build_group_map};
    use ndarray::{array, Array1};

    fn fusion_info() -> MultiTaskMapInfo {
        let g = FusionGraph::new(
            3,
            vec![Edge { m: 0, l: 1, r: 0.8 }, Edge { m: 1, l: 2, r: -0.5 }],
        )
        .unwrap();
        MultiTaskMapInfo::new(build_fusion_map(&g, 1.3).unwrap(), 4)
    }

    #[test]
    fn zero_b() {
        let info = fusion_info();
        let e = smoothed_eval_mt(&info, &Array2::zeros((4, 3)), 0.1).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, Array2::<f64>::zeros((4, 3)));
        assert_eq!(info.d_mt(), 4.0);
    }

    #[test]
    fn single_task_reduction() {
        let g = GroupStructure::new(1, vec![Group { members: vec![0], weight: 2.0 }]).unwrap();
        let info = MultiTaskMapInfo::new(build_group_map(&g, 0.5).unwrap(), 3);
        let b = array![[0.3], [-2.0], [0.0]];
        let mt = smoothed_eval_mt(&info, &b, 0.2).unwrap();
        let single = info.stacked_map().smoothed_eval(&b.column(0).to_owned(), 0.2).unwrap();
        assert!((mt.value - single.value).abs() <= 1e-12 * single.value.abs());
        for j in 0..3 {
            assert!((mt.gradient[[j, 0]] - single.gradient[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradient_rows_decouple() {
        let info = fusion_info();
        let b = Array2::from_shape_fn((4, 3), |(j, k)| ((j * 3 + k) as f64 * 0.7).sin());
        let base = smoothed_eval_mt(&info, &b, 0.05).unwrap();
        let mut perturbed = b.clone();
        perturbed.row_mut(2).assign(&Array1::from(vec![5.0, -4.0, 1.0]));
        let after = smoothed_eval_mt(&info, &perturbed, 0.05).unwrap();
        for j in [0, 1, 3] {
            assert_eq!(base.gradient.row(j), after.gradient.row(j));
        }
    }

    #[test]
    fn shape_errors() {
        let info = fusion_info();
        assert!(smoothed_eval_mt(&info, &Array2::zeros((3, 3)), 0.1).is_err());
        assert!(info.exact_penalty(&Array2::zeros((4, 2))).is_err());
    }
}
