//! Problems, prior structures, solver configuration and results.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::l1_norm;
use crate::penalty::PenaltyLinearMap;

pub const DEFAULT_MU: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 20_000;

fn check_finite(matrix: &'static str, m: ArrayView2<f64>) -> Result<()> {
    for ((r, c), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                matrix,
                row: r + 1,
                col: c + 1,
            });
        }
    }
    Ok(())
}

/// Single-task squared-error regression data, `y = X beta + noise`.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: Array2<f64>,
    y: Array1<f64>,
    gram: Option<Array2<f64>>,
    xty: Option<Array1<f64>>,
    yty: f64,
}

impl RegressionProblem {
    /// Validates `X` and `y`; with `precompute` the Gram matrix `XᵀX` and
    /// `Xᵀy` are formed once so per-iteration cost no longer depends on N.
    pub fn new(x: Array2<f64>, y: Array1<f64>, precompute: bool) -> Result<Self> {
        let (n, j) = x.dim();
        if n == 0 || j == 0 {
            return Err(Error::InvalidStructure(format!(
                "design matrix must be non-empty, got {n}x{j}"
            )));
        }
        if y.len() != n {
            return Err(Error::dims("response length vs rows of X", n, y.len()));
        }
        check_finite("X", x.view())?;
        check_finite("y", y.view().insert_axis(Axis(1)))?;
        let yty = y.dot(&y);
        let mut problem = RegressionProblem {
            x,
            y,
            gram: None,
            xty: None,
            yty,
        };
        if precompute {
            problem.precompute();
        }
        Ok(problem)
    }

    pub fn precompute(&mut self) {
        if self.gram.is_none() {
            self.gram = Some(self.x.t().dot(&self.x));
            self.xty = Some(self.x.t().dot(&self.y));
        }
    }

    pub fn with_precompute(mut self) -> Self {
        self.precompute();
        self
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn gram(&self) -> Option<&Array2<f64>> {
        self.gram.as_ref()
    }

    pub fn xty(&self) -> Option<&Array1<f64>> {
        self.xty.as_ref()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn j(&self) -> usize {
        self.x.ncols()
    }

    /// `½‖y − Xβ‖²`.
    pub fn loss(&self, beta: &Array1<f64>) -> f64 {
        match (&self.gram, &self.xty) {
            (Some(g), Some(xty)) => {
                let quad = beta.dot(&g.dot(beta));
                (0.5 * self.yty - beta.dot(xty) + 0.5 * quad).max(0.0)
            }
            _ => {
                let r = &self.y - &self.x.dot(beta);
                0.5 * r.dot(&r)
            }
        }
    }

    /// `Xᵀ(Xw − y)`, through the Gram matrix when it is available.
    pub fn loss_gradient(&self, w: &Array1<f64>) -> Array1<f64> {
        match (&self.gram, &self.xty) {
            (Some(g), Some(xty)) => g.dot(w) - xty,
            _ => {
                let r = self.x.dot(w) - &self.y;
                self.x.t().dot(&r)
            }
        }
    }
}

/// Multi-task data sharing one design matrix: `Y = X B + noise`.
#[derive(Debug, Clone)]
pub struct MultiTaskProblem {
    x: Array2<f64>,
    y: Array2<f64>,
    gram: Option<Array2<f64>>,
    xty: Option<Array2<f64>>,
    yty: f64,
}

impl MultiTaskProblem {
    pub fn new(x: Array2<f64>, y: Array2<f64>, precompute: bool) -> Result<Self> {
        let (n, j) = x.dim();
        if n == 0 || j == 0 {
            return Err(Error::InvalidStructure(format!(
                "design matrix must be non-empty, got {n}x{j}"
            )));
        }
        if y.nrows() != n {
            return Err(Error::dims("rows of Y vs rows of X", n, y.nrows()));
        }
        if y.ncols() == 0 {
            return Err(Error::InvalidStructure("Y must have at least one task".into()));
        }
        check_finite("X", x.view())?;
        check_finite("Y", y.view())?;
        let yty = y.iter().map(|v| v * v).sum();
        let mut problem = MultiTaskProblem {
            x,
            y,
            gram: None,
            xty: None,
            yty,
        };
        if precompute {
            problem.precompute();
        }
        Ok(problem)
    }

    pub fn precompute(&mut self) {
        if self.gram.is_none() {
            self.gram = Some(self.x.t().dot(&self.x));
            self.xty = Some(self.x.t().dot(&self.y));
        }
    }

    pub fn with_precompute(mut self) -> Self {
        self.precompute();
        self
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn j(&self) -> usize {
        self.x.ncols()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    pub fn gram(&self) -> Option<&Array2<f64>> {
        self.gram.as_ref()
    }

    /// `½‖Y − XB‖_F²`.
    pub fn loss(&self, b: &Array2<f64>) -> f64 {
        match (&self.gram, &self.xty) {
            (Some(g), Some(xty)) => {
                let quad: f64 = (b * &g.dot(b)).sum();
                let lin: f64 = (b * xty).sum();
                (0.5 * self.yty - lin + 0.5 * quad).max(0.0)
            }
            _ => {
                let r = &self.y - &self.x.dot(b);
                0.5 * r.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    pub fn loss_gradient(&self, w: &Array2<f64>) -> Array2<f64> {
        match (&self.gram, &self.xty) {
            (Some(g), Some(xty)) => g.dot(w) - xty,
            _ => {
                let r = self.x.dot(w) - &self.y;
                self.x.t().dot(&r)
            }
        }
    }

    /// Single-task view of task `k` (column `k` of `Y`).
    pub fn task(&self, k: usize) -> Result<RegressionProblem> {
        if k >= self.k() {
            return Err(Error::dims("task index", self.k(), k + 1));
        }
        RegressionProblem::new(self.x.clone(), self.y.column(k).to_owned(), self.gram.is_some())
    }

    /// The equivalent single-task problem over `vec(B)`.
    ///
    /// Coefficient `(j, k)` maps to index `k * J + j`; the design is the
    /// block-diagonal `I_K ⊗ X` and the response stacks the columns of `Y`.
    pub fn stacked(&self) -> Result<RegressionProblem> {
        let (n, j, k) = (self.n(), self.j(), self.k());
        let mut x = Array2::zeros((n * k, j * k));
        let mut y = Array1::zeros(n * k);
        for t in 0..k {
            x.slice_mut(ndarray::s![t * n..(t + 1) * n, t * j..(t + 1) * j])
                .assign(&self.x);
            y.slice_mut(ndarray::s![t * n..(t + 1) * n])
                .assign(&self.y.column(t));
        }
        RegressionProblem::new(x, y, false)
    }
}

/// One weighted group of coefficient indices (0-based, ascending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<usize>,
    pub weight: f64,
}

/// Possibly overlapping groups over `dim` coefficients (or tasks).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    dim: usize,
    groups: Vec<Group>,
}

impl GroupStructure {
    pub fn new(dim: usize, groups: Vec<Group>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidStructure("group structure dimension must be positive".into()));
        }
        for (gi, g) in groups.iter().enumerate() {
            if g.members.is_empty() {
                return Err(Error::InvalidStructure(format!("group {} is empty", gi + 1)));
            }
            if !(g.weight.is_finite() && g.weight > 0.0) {
                return Err(Error::InvalidStructure(format!(
                    "group {} has non-positive weight {}",
                    gi + 1,
                    g.weight
                )));
            }
            if let Some(&bad) = g.members.iter().find(|&&m| m >= dim) {
                return Err(Error::InvalidStructure(format!(
                    "group {} member {} out of range 1..={dim}",
                    gi + 1,
                    bad + 1
                )));
            }
            if g.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "group {} members must be strictly ascending",
                    gi + 1
                )));
            }
        }
        Ok(GroupStructure { dim, groups })
    }

    /// Consecutive windows of `size` indices, successive windows sharing
    /// `overlap` indices, all with unit weight.
    pub fn chain(num_groups: usize, size: usize, overlap: usize) -> Result<Self> {
        if size == 0 || overlap >= size {
            return Err(Error::InvalidStructure(format!(
                "chain needs 0 <= overlap < size, got size {size}, overlap {overlap}"
            )));
        }
        let stride = size - overlap;
        let dim = stride * num_groups + overlap;
        let groups = (0..num_groups)
            .map(|g| Group {
                members: (g * stride..g * stride + size).collect(),
                weight: 1.0,
            })
            .collect();
        GroupStructure::new(dim, groups)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// A signed, weighted edge `(m, l, r)` with `m < l` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub m: usize,
    pub l: usize,
    pub r: f64,
}

/// Graph over `dim` coefficients (or tasks) guiding the fusion penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGraph {
    dim: usize,
    edges: Vec<Edge>,
}

impl FusionGraph {
    pub fn new(dim: usize, edges: Vec<Edge>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidStructure("graph dimension must be positive".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            if e.m >= e.l {
                return Err(Error::InvalidStructure(format!(
                    "edge {} must satisfy m < l, got ({}, {})",
                    ei + 1,
                    e.m + 1,
                    e.l + 1
                )));
            }
            if e.l >= dim {
                return Err(Error::InvalidStructure(format!(
                    "edge {} endpoint {} out of range 1..={dim}",
                    ei + 1,
                    e.l + 1
                )));
            }
            if !(e.r.is_finite() && e.r != 0.0) {
                return Err(Error::InvalidStructure(format!(
                    "edge {} weight must be finite and non-zero, got {}",
                    ei + 1,
                    e.r
                )));
            }
            if !seen.insert((e.m, e.l)) {
                return Err(Error::InvalidStructure(format!(
                    "duplicate edge ({}, {})",
                    e.m + 1,
                    e.l + 1
                )));
            }
        }
        Ok(FusionGraph { dim, edges })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// How the smoothing parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Explicit μ.
    Mu(f64),
    /// Target accuracy ε; μ = ε / (2D).
    Epsilon(f64),
}

impl Smoothing {
    /// Builds from optional flags; supplying both is an error.
    pub fn from_options(mu: Option<f64>, epsilon: Option<f64>) -> Result<Self> {
        match (mu, epsilon) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "set either mu or epsilon, not both".into(),
            )),
            (Some(m), None) => Ok(Smoothing::Mu(m)),
            (None, Some(e)) => Ok(Smoothing::Epsilon(e)),
            (None, None) => Ok(Smoothing::Mu(DEFAULT_MU)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Overrides the γ the penalty map was built with, when set.
    pub gamma: Option<f64>,
    pub smoothing: Smoothing,
    pub tol: f64,
    pub max_iter: usize,
    /// Stop as soon as the objective is at or below this value instead of
    /// using the relative-change rule.
    #[serde(default)]
    pub target_objective: Option<f64>,
    pub precompute_gram: bool,
    pub record_trace: bool,
    /// Multiplies the Lipschitz constant. Diagnostic only; 1 in normal use.
    #[serde(default = "one")]
    pub lipschitz_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.0,
            gamma: None,
            smoothing: Smoothing::Mu(DEFAULT_MU),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            target_objective: None,
            precompute_gram: false,
            record_trace: false,
            lipschitz_scale: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        SolverConfig {
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return bad(format!("gamma must be finite and >= 0, got {g}"));
            }
        }
        match self.smoothing {
            Smoothing::Mu(m) if !(m.is_finite() && m > 0.0) => {
                return bad(format!("mu must be positive, got {m}"))
            }
            Smoothing::Epsilon(e) if !(e.is_finite() && e > 0.0) => {
                return bad(format!("epsilon must be positive, got {e}"))
            }
            _ => {}
        }
        if !(self.tol >= 0.0) {
            return bad(format!("tol must be >= 0, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if let Some(t) = self.target_objective {
            if !t.is_finite() {
                return bad(format!("target objective must be finite, got {t}"));
            }
        }
        if !(self.lipschitz_scale.is_finite() && self.lipschitz_scale > 0.0) {
            return bad(format!("lipschitz_scale must be positive, got {}", self.lipschitz_scale));
        }
        Ok(())
    }
}

/// Objective values after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Original objective f.
    pub objective: f64,
    /// Smoothed objective f̃ (equal to f for the non-smoothing baselines).
    pub smoothed_objective: f64,
}

/// Outcome of a solve. `T` is `Array1` for single-task and `Array2` (J×K)
/// for multi-task problems.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T = Array1<f64>> {
    pub beta: T,
    pub objective: f64,
    pub smoothed_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Option<Vec<TracePoint>>,
    pub wall_seconds: f64,
    /// Smoothing parameter used; `None` for the non-smoothing baselines.
    pub mu: Option<f64>,
    /// Step-size constant used by the solver.
    pub lipschitz: Option<f64>,
}

pub type MultiTaskSolveResult = SolveResult<Array2<f64>>;

/// `½‖y − Xβ‖² + Ω(β) + λ‖β‖₁`.
pub fn eval_objective(
    problem: &RegressionProblem,
    map: &PenaltyLinearMap,
    beta: &Array1<f64>,
    lambda: f64,
) -> Result<f64> {
    if beta.len() != problem.j() {
        return Err(Error::dims("beta length", problem.j(), beta.len()));
    }
    let penalty = map.exact_penalty(beta)?;
    Ok(problem.loss(beta) + penalty + lambda * l1_norm(beta.view()))
}

/// `½‖Y − XB‖_F² + Σ_j Ω(B_j·) + λ‖B‖₁`, the penalty map living over tasks.
pub fn eval_objective_mt(
    problem: &MultiTaskProblem,
    map: &PenaltyLinearMap,
    b: &Array2<f64>,
    lambda: f64,
) -> Result<f64> {
    if b.dim() != (problem.j(), problem.k()) {
        return Err(Error::dims("rows of B", problem.j(), b.nrows()));
    }
    if map.dim() != problem.k() {
        return Err(Error::dims("penalty map dimension vs tasks", problem.k(), map.dim()));
    }
    let mut penalty = 0.0;
    for row in b.rows() {
        penalty += map.exact_penalty(&row.to_owned())?;
    }
    let l1: f64 = b.iter().map(|v| v.abs()).sum();
    Ok(problem.loss(b) + penalty + lambda * l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::build_group_map;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn identity_precompute() {
        let p = RegressionProblem::new(Array2::eye(2), array![1.0, 1.0], true).unwrap();
        assert_eq!(p.gram().unwrap(), &Array2::<f64>::eye(2));
        assert_eq!(p.xty().unwrap(), &array![1.0, 1.0]);
    }

    #[test]
    fn nan_reports_position() {
        let mut x = Array2::zeros((3, 2));
        x[[2, 1]] = f64::NAN;
        let err = RegressionProblem::new(x, Array1::zeros(3), false).unwrap_err();
        match err {
            Error::NonFinite { matrix, row, col } => {
                assert_eq!((matrix, row, col), ("X", 3, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let err = RegressionProblem::new(Array2::zeros((3, 2)), Array1::zeros(4), false).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 4, .. }));
    }

    #[test]
    fn gram_matches_direct_product() {
        let x = Array2::from_shape_fn((5, 3), |(i, j)| ((i * 7 + j * 3) as f64).sin());
        let p = RegressionProblem::new(x.clone(), Array1::ones(5), true).unwrap();
        let g = p.gram().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let direct: f64 = (0..5).map(|i| x[[i, a]] * x[[i, b]]).sum();
                assert_relative_eq!(g[[a, b]], direct, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn objective_at_zero_is_half_response_norm() {
        let p = RegressionProblem::new(Array2::eye(3), array![1.0, 2.0, 2.0], false).unwrap();
        let groups = GroupStructure::new(
            3,
            vec![Group { members: vec![0, 1], weight: 1.0 }],
        )
        .unwrap();
        let map = build_group_map(&groups, 1.0).unwrap();
        let f = eval_objective(&p, &map, &Array1::zeros(3), 2.0).unwrap();
        assert_eq!(f, 4.5);
    }

    #[test]
    fn pure_lasso_hand_value() {
        let p = RegressionProblem::new(Array2::eye(2), array![0.0, 0.0], false).unwrap();
        let map = PenaltyLinearMap::empty(2);
        let f = eval_objective(&p, &map, &array![1.0, -1.0], 1.0).unwrap();
        assert_eq!(f, 3.0);
    }

    #[test]
    fn chain_layout() {
        let g = GroupStructure::chain(3, 100, 10).unwrap();
        assert_eq!(g.dim(), 280);
        assert_eq!(g.groups()[1].members.first(), Some(&90));
        assert!(GroupStructure::chain(2, 5, 5).is_err());
    }

    #[test]
    fn graph_rejects_bad_edges() {
        let e = |m, l, r| Edge { m, l, r };
        assert!(FusionGraph::new(3, vec![e(1, 1, 1.0)]).is_err());
        assert!(FusionGraph::new(3, vec![e(0, 1, 0.0)]).is_err());
        assert!(FusionGraph::new(3, vec![e(0, 1, 1.0), e(0, 1, 0.5)]).is_err());
        assert!(FusionGraph::new(3, vec![e(0, 3, 1.0)]).is_err());
        assert!(FusionGraph::new(3, vec![e(0, 2, -0.4)]).is_ok());
    }

    #[test]
    fn both_smoothing_flags_rejected() {
        assert!(Smoothing::from_options(Some(1e-3), Some(1e-2)).is_err());
        assert_eq!(Smoothing::from_options(None, None).unwrap(), Smoothing::Mu(1e-4));
    }
}
