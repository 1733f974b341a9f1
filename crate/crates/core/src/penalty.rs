//! Structured penalties written as `Ω(β) = max_{α ∈ Q} αᵀCβ`.
//!
//! Both penalty families reduce to a sparse matrix `C` and a dual domain `Q`:
//!
//! * overlapping groups: one row of `C` per (member, group) pair carrying
//!   `γ·w_g`, and `Q` a product of unit ℓ2 balls, one per group;
//! * graph fusion: the weighted edge-vertex incidence matrix, and `Q` the unit
//!   ℓ∞ box.
//!
//! Smoothing subtracts `μ·½‖α‖²` inside the max. The maximiser is then the
//! projection of `Cβ/μ` onto `Q`, which gives the value, the gradient `Cᵀα*`
//! and a gradient Lipschitz constant `‖C‖²/μ`.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, sign, POWER_MAX_ITER};
use crate::model::{FusionGraph, GroupStructure};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;

/// Dual domain `Q`.
#[derive(Debug, Clone, PartialEq)]
pub enum DualBall {
    /// `‖α‖∞ ≤ 1`.
    Box,
    /// Product of unit ℓ2 balls over consecutive blocks of the given lengths.
    Blocks(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Group,
    Fusion,
    /// Any `‖Cβ‖₁` (or block-ℓ2) penalty supplied as raw triplets.
    General,
}

impl MapKind {
    fn name(self) -> &'static str {
        match self {
            MapKind::Group => "group",
            MapKind::Fusion => "fusion",
            MapKind::General => "general",
        }
    }
}

/// A spectral norm value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralNorm {
    Exact(f64),
    UpperBound(f64),
    PowerIteration(f64),
}

impl SpectralNorm {
    pub fn value(self) -> f64 {
        match self {
            SpectralNorm::Exact(v) | SpectralNorm::UpperBound(v) | SpectralNorm::PowerIteration(v) => v,
        }
    }

    fn scaled(self, s: f64) -> Self {
        match self {
            SpectralNorm::Exact(v) => SpectralNorm::Exact(v * s),
            SpectralNorm::UpperBound(v) => SpectralNorm::UpperBound(v * s),
            SpectralNorm::PowerIteration(v) => SpectralNorm::PowerIteration(v * s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Closed form for group maps.
    Exact,
    /// Degree bound for fusion maps.
    Bound,
    /// Power iteration on `CᵀC`; valid for any map.
    Power,
}

/// The sparse matrix `C` with its dual domain and the constants derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyLinearMap {
    rows: usize,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Entries at γ = 1; the stored matrix is `gamma * unit_vals`.
    unit_vals: Vec<f64>,
    vals: Vec<f64>,
    ball: DualBall,
    block_starts: Vec<usize>,
    kind: MapKind,
    gamma: f64,
    d: f64,
    /// Norm of the γ = 1 matrix.
    unit_norm: SpectralNorm,
}

/// Smoothed penalty value `f_μ(β)`, its gradient `Cᵀα*` and the maximiser `α*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedPenaltyEval {
    pub value: f64,
    pub gradient: Array1<f64>,
    pub alpha: Array1<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("gamma must be finite and >= 0, got {gamma}")))
    }
}

/// One row per (member, group) pair, groups in input order and members
/// ascending, each carrying `γ·w_g` in the member's column.
pub fn build_group_map(groups: &GroupStructure, gamma: f64) -> Result<PenaltyLinearMap> {
    check_gamma(gamma)?;
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut unit_vals = Vec::new();
    let mut blocks = Vec::with_capacity(groups.len());
    for g in groups.groups() {
        for &i in &g.members {
            cols.push(i);
            unit_vals.push(g.weight);
            row_ptr.push(cols.len());
        }
        blocks.push(g.members.len());
    }
    let mut map = PenaltyLinearMap::assemble(
        groups.dim(),
        row_ptr,
        cols,
        unit_vals,
        DualBall::Blocks(blocks),
        MapKind::Group,
        gamma,
    );
    map.unit_norm = SpectralNorm::Exact(map.column_norm_bound(1.0, true));
    Ok(map)
}

/// Weighted edge-vertex incidence matrix with `τ(r) = |r|`: edge `(m, l, r)`
/// puts `γ|r|` in column `m` and `−γ·sign(r)|r|` in column `l`.
pub fn build_fusion_map(graph: &FusionGraph, gamma: f64) -> Result<PenaltyLinearMap> {
    check_gamma(gamma)?;
    let mut row_ptr = vec![0];
    let mut cols = Vec::with_capacity(2 * graph.len());
    let mut unit_vals = Vec::with_capacity(2 * graph.len());
    for e in graph.edges() {
        let tau = e.r.abs();
        cols.push(e.m);
        unit_vals.push(tau);
        cols.push(e.l);
        unit_vals.push(-sign(e.r) * tau);
        row_ptr.push(cols.len());
    }
    let mut map = PenaltyLinearMap::assemble(
        graph.dim(),
        row_ptr,
        cols,
        unit_vals,
        DualBall::Box,
        MapKind::Fusion,
        gamma,
    );
    map.unit_norm = SpectralNorm::UpperBound(map.column_norm_bound(2.0, true));
    Ok(map)
}

/// Projection onto the dual domain: block-wise rescaling onto the unit ℓ2
/// ball, or entrywise clamping to `[-1, 1]`.
pub fn project_dual(u: ArrayView1<f64>, ball: &DualBall) -> Array1<f64> {
    let mut out = u.to_owned();
    project_dual_inplace(&mut out, ball);
    out
}

fn project_dual_inplace(u: &mut Array1<f64>, ball: &DualBall) {
    match ball {
        DualBall::Box => u.mapv_inplace(|x| x.clamp(-1.0, 1.0)),
        DualBall::Blocks(lens) => {
            let s = u.as_slice_mut().expect("contiguous");
            let mut start = 0;
            for &len in lens {
                let block = &mut s[start..start + len];
                let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1.0 {
                    block.iter_mut().for_each(|x| *x /= norm);
                }
                start += len;
            }
        }
    }
}

impl PenaltyLinearMap {
    fn assemble(
        dim: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        unit_vals: Vec<f64>,
        ball: DualBall,
        kind: MapKind,
        gamma: f64,
    ) -> Self {
        let rows = row_ptr.len() - 1;
        let (d, block_starts) = match &ball {
            DualBall::Box => (rows as f64 / 2.0, Vec::new()),
            DualBall::Blocks(lens) => {
                let mut starts = Vec::with_capacity(lens.len());
                let mut s = 0;
                for &l in lens {
                    starts.push(s);
                    s += l;
                }
                (lens.len() as f64 / 2.0, starts)
            }
        };
        let vals = unit_vals.iter().map(|v| gamma * v).collect();
        PenaltyLinearMap {
            rows,
            dim,
            row_ptr,
            cols,
            unit_vals,
            vals,
            ball,
            block_starts,
            kind,
            gamma,
            d,
            unit_norm: SpectralNorm::Exact(0.0),
        }
    }

    /// A map with no rows: `Ω ≡ 0`, the pure lasso case.
    pub fn empty(dim: usize) -> Self {
        PenaltyLinearMap::assemble(
            dim,
            vec![0],
            Vec::new(),
            Vec::new(),
            DualBall::Blocks(Vec::new()),
            MapKind::General,
            0.0,
        )
    }

    /// Arbitrary `C` from `(row, col, value)` triplets (values taken at γ = 1).
    ///
    /// With `DualBall::Box` this is the penalty `γ‖Cβ‖₁`. The spectral norm is
    /// obtained by power iteration.
    pub fn from_triplets(
        rows: usize,
        dim: usize,
        triplets: &[(usize, usize, f64)],
        ball: DualBall,
        gamma: f64,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        if let DualBall::Blocks(lens) = &ball {
            let total: usize = lens.iter().sum();
            if total != rows {
                return Err(Error::dims("sum of dual block lengths", rows, total));
            }
            if lens.contains(&0) {
                return Err(Error::InvalidStructure("dual blocks must be non-empty".into()));
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut unit_vals = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            if r >= rows || c >= dim {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({}, {}) outside a {rows}x{dim} map",
                    r + 1,
                    c + 1
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { matrix: "C", row: r + 1, col: c + 1 });
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            unit_vals.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut map =
            PenaltyLinearMap::assemble(dim, row_ptr, cols, unit_vals, ball, MapKind::General, gamma);
        let unit = map.with_gamma(1.0);
        map.unit_norm = SpectralNorm::PowerIteration(unit.power_norm(DEFAULT_POWER_TOL));
        Ok(map)
    }

    /// The same structure at a different γ.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        out.gamma = gamma;
        out.vals = self.unit_vals.iter().map(|v| gamma * v).collect();
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `D = max_{α ∈ Q} ½‖α‖²`.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn ball(&self) -> &DualBall {
        &self.ball
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Spectral norm recorded at construction (exact for groups, degree bound
    /// for fusion, power iteration otherwise).
    pub fn norm(&self) -> SpectralNorm {
        self.unit_norm.scaled(self.gamma)
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// `(row, col, value)` for every stored entry, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            Err(Error::dims("coefficient vector vs penalty map", self.dim, len))
        } else {
            Ok(())
        }
    }

    /// `Cβ`.
    pub fn apply(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(self.rows, |r| {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * beta[self.cols[k]];
            }
            s
        })
    }

    /// `Cᵀα`.
    pub fn apply_transpose(&self, alpha: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim);
        for r in 0..self.rows {
            let a = alpha[r];
            if a == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k]] += self.vals[k] * a;
            }
        }
        out
    }

    /// Dual-norm of `Cβ`, i.e. the penalty given `Cβ`.
    fn penalty_of(&self, cb: &Array1<f64>) -> f64 {
        match &self.ball {
            DualBall::Box => cb.iter().map(|v| v.abs()).sum(),
            DualBall::Blocks(lens) => self
                .block_starts
                .iter()
                .zip(lens)
                .map(|(&s, &len)| cb.slice(ndarray::s![s..s + len]).dot(&cb.slice(ndarray::s![s..s + len])).sqrt())
                .sum(),
        }
    }

    /// `Ω(β)`: `‖Cβ‖₁` for the box, the sum of block ℓ2 norms for groups.
    pub fn exact_penalty(&self, beta: &Array1<f64>) -> Result<f64> {
        self.check_dim(beta.len())?;
        Ok(self.penalty_of(&self.apply(beta.view())))
    }

    /// `f_μ(β)`, `Cᵀα*` and `α* = Π_Q(Cβ/μ)`.
    pub fn smoothed_eval(&self, beta: &Array1<f64>, mu: f64) -> Result<SmoothedPenaltyEval> {
        self.check_dim(beta.len())?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
        }
        let cb = self.apply(beta.view());
        let (value, alpha) = self.smooth_from_cb(&cb, mu);
        let gradient = self.apply_transpose(alpha.view());
        Ok(SmoothedPenaltyEval { value, gradient, alpha })
    }

    fn smooth_from_cb(&self, cb: &Array1<f64>, mu: f64) -> (f64, Array1<f64>) {
        let mut alpha = cb / mu;
        project_dual_inplace(&mut alpha, &self.ball);
        let value = alpha.dot(cb) - 0.5 * mu * alpha.dot(&alpha);
        (value, alpha)
    }

    /// Value and gradient of `f_μ` without the bounds checks.
    pub(crate) fn smoothed_gradient(&self, beta: ArrayView1<f64>, mu: f64) -> Array1<f64> {
        let cb = self.apply(beta);
        let (_, alpha) = self.smooth_from_cb(&cb, mu);
        self.apply_transpose(alpha.view())
    }

    pub(crate) fn penalty_at(&self, beta: ArrayView1<f64>) -> f64 {
        self.penalty_of(&self.apply(beta))
    }

    /// `(Ω(β), f_μ(β))` sharing one product `Cβ`.
    pub(crate) fn exact_and_smoothed(&self, beta: ArrayView1<f64>, mu: f64) -> (f64, f64) {
        let cb = self.apply(beta);
        let (smooth, _) = self.smooth_from_cb(&cb, mu);
        (self.penalty_of(&cb), smooth)
    }

    /// `sqrt(factor · max_j Σ_r C_rj²)`, over the γ = 1 entries when `unit`.
    fn column_norm_bound(&self, factor: f64, unit: bool) -> f64 {
        let vals = if unit { &self.unit_vals } else { &self.vals };
        let mut col_sq = vec![0.0; self.dim];
        for (c, v) in self.cols.iter().zip(vals) {
            col_sq[*c] += v * v;
        }
        let max = col_sq.into_iter().fold(0.0, f64::max);
        (factor * max).sqrt()
    }

    fn power_norm(&self, tol: f64) -> f64 {
        let eig = power_iteration(self.dim, tol, POWER_MAX_ITER, |v| {
            self.apply_transpose(self.apply(v.view()).view())
        });
        eig.max(0.0).sqrt()
    }

    /// `‖C‖` by the requested route.
    ///
    /// `Exact` is `γ·max_j sqrt(Σ_{g∋j} w_g²)` and needs a group map; `Bound`
    /// is `sqrt(2γ² max_j d_j)` with `d_j = Σ_{e∋j} τ(r_e)²` and needs a
    /// fusion map; `Power` runs power iteration on `CᵀC` to relative `tol`.
    pub fn spectral_norm(&self, mode: NormMode, tol: f64) -> Result<f64> {
        match (mode, self.kind) {
            (NormMode::Exact, MapKind::Group) => Ok(self.column_norm_bound(1.0, false)),
            (NormMode::Bound, MapKind::Fusion) => Ok(self.column_norm_bound(2.0, false)),
            (NormMode::Power, _) => Ok(self.power_norm(tol)),
            (NormMode::Exact, kind) => Err(Error::NormMode { mode: "exact", kind: kind.name() }),
            (NormMode::Bound, kind) => Err(Error::NormMode { mode: "bound", kind: kind.name() }),
        }
    }

    /// Replaces the recorded norm with a power-iteration value.
    pub fn refine_norm(&mut self, tol: f64) {
        let unit = self.with_gamma(1.0);
        self.unit_norm = SpectralNorm::PowerIteration(unit.power_norm(tol));
    }

    /// `C ⊗ I` for `copies` coefficient rows: entry `(r, k)` of `C` lands at
    /// row `j·rows + r`, column `k·copies + j` for each copy `j`.
    ///
    /// This is the penalty map of the multi-task problem written over
    /// `vec(B)`, with `B` stored column-major (task-major).
    pub fn kron_identity(&self, copies: usize) -> PenaltyLinearMap {
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.nnz() * copies);
        let mut unit_vals = Vec::with_capacity(self.nnz() * copies);
        for j in 0..copies {
            for r in 0..self.rows {
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    cols.push(self.cols[k] * copies + j);
                    unit_vals.push(self.unit_vals[k]);
                }
                row_ptr.push(cols.len());
            }
        }
        let ball = match &self.ball {
            DualBall::Box => DualBall::Box,
            DualBall::Blocks(lens) => {
                DualBall::Blocks(lens.iter().copied().cycle().take(lens.len() * copies).collect())
            }
        };
        let mut map = PenaltyLinearMap::assemble(
            self.dim * copies,
            row_ptr,
            cols,
            unit_vals,
            ball,
            self.kind,
            self.gamma,
        );
        map.unit_norm = self.unit_norm;
        map
    }
}
