//! Seeded synthetic benchmarks.
//!
//! All randomness comes from ChaCha8 seeded with the generator's `seed`, so a
//! `GenSpec` fully determines its dataset within this implementation.

use ndarray::{Array1, Array2, ArrayView, ArrayView2, Dimension};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Edge, FusionGraph, Group, GroupStructure, MultiTaskProblem, RegressionProblem};

/// Decay length in the chain benchmark's true coefficients.
const CHAIN_DECAY: f64 = 100.0;

/// Chain of overlapping groups: windows of `group_size` inputs, successive
/// windows sharing `overlap` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub seed: u64,
    pub n: usize,
    pub num_groups: usize,
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
}

fn default_group_size() -> usize {
    100
}
fn default_overlap() -> usize {
    10
}
fn default_noise() -> f64 {
    1.0
}

impl ChainSpec {
    pub fn new(seed: u64, n: usize, num_groups: usize) -> Self {
        ChainSpec {
            seed,
            n,
            num_groups,
            group_size: default_group_size(),
            overlap: default_overlap(),
            noise_sd: default_noise(),
        }
    }

    /// `J = (group_size − overlap)·|G| + overlap`.
    pub fn j(&self) -> usize {
        self.group_size.saturating_sub(self.overlap) * self.num_groups + self.overlap
    }
}

/// Multi-task outputs in correlated blocks over SNP-like inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocksSpec {
    pub seed: u64,
    #[serde(default = "default_mt_n")]
    pub n: usize,
    #[serde(default = "default_mt_j")]
    pub j: usize,
    /// Task block sizes; `K` is their sum.
    #[serde(default = "default_blocks")]
    pub blocks: Vec<usize>,
    #[serde(default = "default_b")]
    pub effect_b: f64,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
    /// Inputs relevant to every task of one block.
    #[serde(default = "default_per_block")]
    pub relevant_per_block: usize,
    /// Inputs relevant to the tasks of two neighbouring blocks.
    #[serde(default = "default_cross")]
    pub cross_block: usize,
}

fn default_mt_n() -> usize {
    100
}
fn default_mt_j() -> usize {
    30
}
fn default_blocks() -> Vec<usize> {
    vec![3, 3, 4]
}
fn default_b() -> f64 {
    0.8
}
fn default_per_block() -> usize {
    3
}
fn default_cross() -> usize {
    2
}

impl BlocksSpec {
    pub fn new(seed: u64) -> Self {
        BlocksSpec {
            seed,
            n: default_mt_n(),
            j: default_mt_j(),
            blocks: default_blocks(),
            effect_b: default_b(),
            noise_sd: default_noise(),
            relevant_per_block: default_per_block(),
            cross_block: default_cross(),
        }
    }

    pub fn k(&self) -> usize {
        self.blocks.iter().sum()
    }
}

/// Full provenance of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GenSpec {
    OverlapChain(ChainSpec),
    MultitaskBlocks(BlocksSpec),
}

fn check_noise(sd: f64) -> Result<()> {
    if sd.is_finite() && sd >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("noise_sd must be >= 0, got {sd}")))
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated standard deviation")
}

/// The chain benchmark: Gaussian `X`, `β_j = (−1)^j exp(−(j−1)/100)` with
/// 1-based `j`, and `y = Xβ + ε`.
pub fn gen_overlap_chain(spec: &ChainSpec) -> Result<(RegressionProblem, GroupStructure, Array1<f64>)> {
    if spec.n == 0 || spec.num_groups == 0 {
        return Err(Error::InvalidConfig("n and num_groups must be positive".into()));
    }
    check_noise(spec.noise_sd)?;
    let groups = GroupStructure::chain(spec.num_groups, spec.group_size, spec.overlap)?;
    let j = groups.dim();
    let beta = Array1::from_shape_fn(j, |i| {
        let one_based = i + 1;
        let sign = if one_based % 2 == 0 { 1.0 } else { -1.0 };
        sign * (-(i as f64) / CHAIN_DECAY).exp()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = Array2::from_shape_simple_fn((spec.n, j), || StandardNormal.sample(&mut rng));
    let noise = normal(spec.noise_sd);
    let y = x.dot(&beta) + Array1::from_shape_simple_fn(spec.n, || noise.sample(&mut rng));
    Ok((RegressionProblem::new(x, y, false)?, groups, beta))
}

/// Multi-task dataset with its true coefficients.
#[derive(Debug, Clone)]
pub struct BlocksDataset {
    pub problem: MultiTaskProblem,
    pub true_b: Array2<f64>,
}

/// SNP-like inputs: entries are Binomial(2, maf) with per-column minor-allele
/// frequency drawn from Uniform(0.05, 0.5).
fn snp_matrix(rng: &mut ChaCha8Rng, n: usize, j: usize) -> Array2<f64> {
    let mafs: Vec<f64> = (0..j).map(|_| rng.random_range(0.05..0.5)).collect();
    let mut x = Array2::zeros((n, j));
    for i in 0..n {
        for (c, &maf) in mafs.iter().enumerate() {
            let a = (rng.random::<f64>() < maf) as u8;
            let b = (rng.random::<f64>() < maf) as u8;
            x[[i, c]] = f64::from(a + b);
        }
    }
    x
}

fn simulate_outputs(rng: &mut ChaCha8Rng, x: &Array2<f64>, b: &Array2<f64>, sd: f64) -> Array2<f64> {
    let noise = normal(sd);
    let (n, k) = (x.nrows(), b.ncols());
    x.dot(b) + Array2::from_shape_simple_fn((n, k), || noise.sample(rng))
}

/// Block-structured multi-task benchmark.
///
/// For each task block a random set of inputs gets coefficient `b` on every
/// task of the block; `cross_block` further inputs get `b` on two
/// neighbouring blocks. All chosen inputs are distinct.
pub fn gen_multitask_blocks(spec: &BlocksSpec) -> Result<BlocksDataset> {
    let k = spec.k();
    let nb = spec.blocks.len();
    if spec.n == 0 || spec.j == 0 || nb == 0 || spec.blocks.contains(&0) {
        return Err(Error::InvalidConfig("n, j and every block size must be positive".into()));
    }
    if spec.cross_block > 0 && nb < 2 {
        return Err(Error::InvalidConfig("cross-block inputs need at least two blocks".into()));
    }
    let needed = nb * spec.relevant_per_block + spec.cross_block;
    if needed > spec.j {
        return Err(Error::InvalidConfig(format!(
            "{needed} relevant inputs requested but only {} available",
            spec.j
        )));
    }
    if !spec.effect_b.is_finite() {
        return Err(Error::InvalidConfig("effect_b must be finite".into()));
    }
    check_noise(spec.noise_sd)?;

    let mut starts = Vec::with_capacity(nb);
    let mut s = 0;
    for &len in &spec.blocks {
        starts.push(s);
        s += len;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chosen = sample(&mut rng, spec.j, needed).into_vec();
    let mut true_b = Array2::zeros((spec.j, k));
    let mut set_block = |input: usize, block: usize| {
        for t in starts[block]..starts[block] + spec.blocks[block] {
            true_b[[input, t]] = spec.effect_b;
        }
    };
    for (i, &input) in chosen.iter().enumerate() {
        if i < nb * spec.relevant_per_block {
            set_block(input, i / spec.relevant_per_block);
        } else {
            let first = rng.random_range(0..nb);
            set_block(input, first);
            set_block(input, (first + 1) % nb);
        }
    }

    let x = snp_matrix(&mut rng, spec.n, spec.j);
    let y = simulate_outputs(&mut rng, &x, &true_b, spec.noise_sd);
    Ok(BlocksDataset {
        problem: MultiTaskProblem::new(x, y, false)?,
        true_b,
    })
}

/// Fresh inputs and outputs for the same coefficients (held-out data).
pub fn resample_blocks(spec: &BlocksSpec, true_b: &Array2<f64>, seed: u64) -> Result<MultiTaskProblem> {
    if true_b.nrows() != spec.j {
        return Err(Error::dims("rows of B vs inputs", spec.j, true_b.nrows()));
    }
    check_noise(spec.noise_sd)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = snp_matrix(&mut rng, spec.n, spec.j);
    let y = simulate_outputs(&mut rng, &x, true_b, spec.noise_sd);
    MultiTaskProblem::new(x, y, false)
}

/// How edges are admitted into the correlation graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphRule {
    /// Edge iff `|r| > ρ`.
    Threshold(f64),
    /// The `n` pairs of largest `|r|` (ties resolved by pair order).
    TargetEdges(usize),
}

/// Pearson correlation of every column pair `m < l`, in lexicographic order.
pub fn pair_correlations(y: ArrayView2<f64>) -> Result<Vec<(usize, usize, f64)>> {
    let (n, k) = y.dim();
    if k < 2 {
        return Err(Error::InvalidStructure(format!("need at least two columns, got {k}")));
    }
    let mut centered = y.to_owned();
    let mut norms = vec![0.0; k];
    for (c, mut col) in centered.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        col -= mean;
        norms[c] = col.dot(&col).sqrt();
        if !(norms[c] > 0.0) {
            return Err(Error::InvalidStructure(format!(
                "column {} is constant; correlation undefined",
                c + 1
            )));
        }
    }
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for m in 0..k {
        for l in m + 1..k {
            let r = centered.column(m).dot(&centered.column(l)) / (norms[m] * norms[l]);
            out.push((m, l, r.clamp(-1.0, 1.0)));
        }
    }
    Ok(out)
}

/// Correlation graph over the columns of `y` with edge weights `r_ml`.
pub fn build_correlation_graph(y: ArrayView2<f64>, rule: GraphRule) -> Result<FusionGraph> {
    let pairs = pair_correlations(y)?;
    let edges: Vec<Edge> = match rule {
        GraphRule::Threshold(rho) => pairs
            .into_iter()
            .filter(|&(_, _, r)| r.abs() > rho && r != 0.0)
            .map(|(m, l, r)| Edge { m, l, r })
            .collect(),
        GraphRule::TargetEdges(count) => {
            if count > pairs.len() {
                return Err(Error::InvalidConfig(format!(
                    "{count} edges requested but only {} pairs exist",
                    pairs.len()
                )));
            }
            let mut ranked: Vec<(usize, (usize, usize, f64))> = pairs.into_iter().enumerate().collect();
            ranked.sort_by(|a, b| b.1 .2.abs().total_cmp(&a.1 .2.abs()).then(a.0.cmp(&b.0)));
            let mut keep: Vec<(usize, (usize, usize, f64))> = ranked.into_iter().take(count).collect();
            if keep.iter().any(|(_, (_, _, r))| *r == 0.0) {
                return Err(Error::InvalidStructure(
                    "target edge count reaches uncorrelated pairs".into(),
                ));
            }
            keep.sort_by_key(|e| e.0);
            keep.into_iter().map(|(_, (m, l, r))| Edge { m, l, r }).collect()
        }
    };
    FusionGraph::new(y.ncols(), edges)
}

/// Random groups over `0..dim`: sizes uniform in `1..=max_size`, weights
/// uniform in `[0.5, 2)`.
pub fn random_groups<R: Rng>(rng: &mut R, dim: usize, num_groups: usize, max_size: usize) -> Result<GroupStructure> {
    if dim == 0 || max_size == 0 {
        return Err(Error::InvalidConfig("dim and max_size must be positive".into()));
    }
    let groups = (0..num_groups)
        .map(|_| {
            let size = rng.random_range(1..=max_size.min(dim));
            let mut members = sample(rng, dim, size).into_vec();
            members.sort_unstable();
            Group { members, weight: rng.random_range(0.5..2.0) }
        })
        .collect();
    GroupStructure::new(dim, groups)
}

/// Random graph with `num_edges` distinct pairs and `|r|` uniform in
/// `[0.2, 1)` with random sign.
pub fn random_graph<R: Rng>(rng: &mut R, dim: usize, num_edges: usize) -> Result<FusionGraph> {
    let pairs = dim * dim.saturating_sub(1) / 2;
    if num_edges > pairs {
        return Err(Error::InvalidConfig(format!("{num_edges} edges requested but only {pairs} pairs exist")));
    }
    let mut picked = sample(rng, pairs, num_edges).into_vec();
    picked.sort_unstable();
    let mut edges = Vec::with_capacity(num_edges);
    let (mut idx, mut next) = (0, 0);
    for m in 0..dim {
        for l in m + 1..dim {
            if next < picked.len() && picked[next] == idx {
                let magnitude: f64 = rng.random_range(0.2..1.0);
                let r = if rng.random::<bool>() { magnitude } else { -magnitude };
                edges.push(Edge { m, l, r });
                next += 1;
            }
            idx += 1;
        }
    }
    FusionGraph::new(dim, edges)
}

/// Gaussian design, coefficients with roughly half the entries zero, unit
/// noise.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, j: usize) -> Result<RegressionProblem> {
    let x = Array2::from_shape_simple_fn((n, j), || StandardNormal.sample(rng));
    let beta = Array1::from_shape_simple_fn(j, || {
        if rng.random::<bool>() {
            0.0
        } else {
            rng.random_range(-2.0..2.0)
        }
    });
    let y = x.dot(&beta) + Array1::from_shape_simple_fn(n, || Distribution::<f64>::sample(&StandardNormal, rng));
    RegressionProblem::new(x, y, false)
}

/// Precision/recall F1 of the nonzero pattern of `estimate` against `truth`.
pub fn support_f1<D: Dimension>(estimate: ArrayView<f64, D>, truth: ArrayView<f64, D>) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (e, t) in estimate.iter().zip(truth.iter()) {
        match (*e != 0.0, *t != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}
