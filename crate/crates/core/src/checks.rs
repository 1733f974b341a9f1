//! The acceptance suite: ten desk-scale checks of solver accuracy, the
//! smoothing machinery, spectral norms, the prox step, convergence rate,
//! method ordering, multi-task consistency, support recovery and
//! reproducibility.
//!
//! Every check is deterministic (fixed seeds) and reports a one-line
//! detail string alongside pass/fail.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baselines::{fobos_solve, subgradient_solve, BaselineConfig};
use crate::clock::Stopwatch;
use crate::datagen::{
    build_correlation_graph, gen_multitask_blocks, gen_overlap_chain, random_graph, random_groups,
    random_problem, resample_blocks, support_f1, BlocksSpec, ChainSpec, GraphRule,
};
use crate::error::{Error, Result};
use crate::io::ResultFile;
use crate::model::{
    eval_objective, eval_objective_mt, Group, GroupStructure, MultiTaskProblem, RegressionProblem, Smoothing,
    SolverConfig,
};
use crate::multitask::{smoothed_eval_mt, spg_solve_mt, MultiTaskMapInfo};
use crate::oracle::{fd_gradient, prox_1d_grid, reference_solve, REFERENCE_MIN_BUDGET};
use crate::penalty::{build_fusion_map, build_group_map, NormMode, PenaltyLinearMap, SpectralNorm};
use crate::solver::{mu_from_epsilon, soft_threshold, spg_solve};

/// Knobs for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Multiplies every smoothing solver's Lipschitz constant.
    pub lipschitz_scale: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { lipschitz_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub criterion: usize,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<22} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

struct Verdict {
    passed: bool,
    detail: String,
}

type CheckFn = fn(&CheckOptions) -> Result<Verdict>;

pub struct Check {
    pub name: &'static str,
    pub criterion: usize,
    pub budget_seconds: f64,
    run: CheckFn,
}

pub const CHECKS: &[Check] = &[
    Check { name: "oracle-agreement", criterion: 1, budget_seconds: 60.0, run: oracle_agreement },
    Check { name: "gradient-fidelity", criterion: 2, budget_seconds: 10.0, run: gradient_fidelity },
    Check { name: "smoothing-sandwich", criterion: 3, budget_seconds: 5.0, run: smoothing_sandwich },
    Check { name: "spectral-norm", criterion: 4, budget_seconds: 10.0, run: spectral_norms },
    Check { name: "prox", criterion: 5, budget_seconds: 10.0, run: prox },
    Check { name: "rate-slope", criterion: 6, budget_seconds: 60.0, run: rate_slope },
    Check { name: "method-ordering", criterion: 7, budget_seconds: 120.0, run: method_ordering },
    Check { name: "multitask-reduction", criterion: 8, budget_seconds: 5.0, run: multitask_reduction },
    Check { name: "support-recovery", criterion: 9, budget_seconds: 180.0, run: support_recovery },
    Check { name: "determinism-roundtrip", criterion: 10, budget_seconds: 10.0, run: determinism },
];

impl Check {
    /// Runs the check; errors and budget overruns count as failures.
    pub fn run(&self, opts: &CheckOptions) -> CheckOutcome {
        let clock = Stopwatch::start();
        let verdict = (self.run)(opts).unwrap_or_else(|e| Verdict { passed: false, detail: format!("error: {e}") });
        let seconds = clock.seconds();
        let (passed, detail) = if seconds > self.budget_seconds {
            (false, format!("{} (over the {} s budget)", verdict.detail, self.budget_seconds))
        } else {
            (verdict.passed, verdict.detail)
        };
        CheckOutcome {
            name: self.name,
            criterion: self.criterion,
            passed,
            detail,
            seconds,
            budget_seconds: self.budget_seconds,
        }
    }
}

/// Checks whose name contains `filter` (all when `None`).
pub fn select(filter: Option<&str>) -> Vec<&'static Check> {
    CHECKS.iter().filter(|c| filter.is_none_or(|f| c.name.contains(f))).collect()
}

pub fn run(filter: Option<&str>, opts: &CheckOptions) -> Vec<CheckOutcome> {
    select(filter).into_iter().map(|c| c.run(opts)).collect()
}

fn solver_config(lambda: f64, opts: &CheckOptions) -> SolverConfig {
    SolverConfig { lipschitz_scale: opts.lipschitz_scale, ..SolverConfig::with_lambda(lambda) }
}

fn random_map<R: Rng>(rng: &mut R, dim: usize, gamma: f64) -> Result<PenaltyLinearMap> {
    if rng.random::<bool>() {
        let count = rng.random_range(1..=5);
        let groups = random_groups(rng, dim, count, dim.min(8))?;
        build_group_map(&groups, gamma)
    } else {
        let max_edges = (dim * (dim - 1) / 2).min(40);
        let count = rng.random_range(1..=max_edges);
        let graph = random_graph(rng, dim, count)?;
        build_fusion_map(&graph, gamma)
    }
}

fn gaussian_vector<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || scale * Distribution::<f64>::sample(&StandardNormal, rng))
}

fn oracle_agreement(opts: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst: f64 = 0.0;
    let mut most_iterations = 0;
    let mut failures = 0;
    for case in 0..20 {
        let gamma = rng.random_range(0.5..3.0);
        let lambda = rng.random_range(0.5..3.0);
        let n = rng.random_range(30..=60);
        let (j, map) = if case < 10 {
            let j = rng.random_range(10..=30);
            let count = rng.random_range(2..=5);
            let groups = random_groups(&mut rng, j, count, 10)?;
            (j, build_group_map(&groups, gamma)?)
        } else {
            let j = rng.random_range(8..=20);
            let count = rng.random_range(j..=40);
            let graph = random_graph(&mut rng, j, count)?;
            (j, build_fusion_map(&graph, gamma)?)
        };
        let problem = random_problem(&mut rng, n, j)?;
        let (_, reference) = reference_solve(&problem, &map, lambda, REFERENCE_MIN_BUDGET)?;
        let cfg = SolverConfig { target_objective: Some(1.001 * reference), ..solver_config(lambda, opts) };
        let spg = spg_solve(&problem, &map, &cfg)?;
        let ratio = spg.objective / reference;
        worst = worst.max(ratio);
        most_iterations = most_iterations.max(spg.iterations);
        if !(spg.converged && ratio <= 1.001) {
            failures += 1;
        }
    }
    Ok(Verdict {
        passed: failures == 0,
        detail: format!(
            "20 instances, worst spg/reference = {worst:.7}, at most {most_iterations} iterations, {failures} not reaching 1.001"
        ),
    })
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

fn gradient_fidelity(_: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mus = [1.0, 1e-2, 1e-4];
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let mu = mus[case % 3];
        let h = 1e-7;
        let gamma = rng.random_range(0.5..2.0);
        let err = if case < 30 {
            let dim = rng.random_range(3..=15);
            let map = random_map(&mut rng, dim, gamma)?;
            let beta = gaussian_vector(&mut rng, dim, 1.0);
            let analytic = map.smoothed_eval(&beta, mu)?.gradient;
            let fd = fd_gradient(|b| map.smoothed_eval(b, mu).map(|e| e.value).unwrap_or(f64::NAN), &beta, h)?;
            max_abs((&analytic - &fd).iter().copied()) / max_abs(analytic.iter().copied()).max(1e-12)
        } else {
            let k = rng.random_range(2..=6);
            let rows = rng.random_range(2..=5);
            let info = MultiTaskMapInfo::new(random_map(&mut rng, k, gamma)?, rows);
            let b = gaussian_vector(&mut rng, rows * k, 1.0);
            let as_matrix = |v: &Array1<f64>| Array2::from_shape_vec((rows, k), v.to_vec()).expect("shape");
            let analytic = smoothed_eval_mt(&info, &as_matrix(&b), mu)?.gradient;
            let fd = fd_gradient(
                |v| smoothed_eval_mt(&info, &as_matrix(v), mu).map(|e| e.value).unwrap_or(f64::NAN),
                &b,
                h,
            )?;
            let diff = analytic.iter().zip(fd.iter()).map(|(a, f)| a - f);
            max_abs(diff) / max_abs(analytic.iter().copied()).max(1e-12)
        };
        worst = worst.max(err);
    }
    Ok(Verdict {
        passed: worst <= 1e-5,
        detail: format!("50 cases (30 single, 20 multi-task), worst relative error {worst:.2e}"),
    })
}

fn smoothing_sandwich(_: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let slack = 1e-12;
    let (mut min_gap, mut max_ratio) = (f64::INFINITY, 0.0f64);
    let mut failures = 0;
    for _ in 0..100 {
        let dim = rng.random_range(2..=20);
        let gamma = rng.random_range(0.1..3.0);
        let map = random_map(&mut rng, dim, gamma)?;
        let mu = 10f64.powf(rng.random_range(-4.0..1.0));
        let scale = 10f64.powf(rng.random_range(-3.0..1.0));
        let beta = gaussian_vector(&mut rng, dim, scale);
        let omega = map.exact_penalty(&beta)?;
        let smooth = map.smoothed_eval(&beta, mu)?.value;
        let gap = omega - smooth;
        let bound = mu * map.d();
        min_gap = min_gap.min(gap);
        max_ratio = max_ratio.max(gap / bound);
        if gap < -slack || gap > bound + slack {
            failures += 1;
        }
    }
    Ok(Verdict {
        passed: failures == 0,
        detail: format!("100 cases, min gap {min_gap:.2e}, max gap/(mu D) {max_ratio:.4}, {failures} outside"),
    })
}

fn spectral_norms(_: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let tol = 1e-14;
    let mut worst_group: f64 = 0.0;
    for _ in 0..20 {
        let dim = rng.random_range(2..=40);
        let count = rng.random_range(1..=10);
        let groups = random_groups(&mut rng, dim, count, dim)?;
        let map = build_group_map(&groups, rng.random_range(0.1..3.0))?;
        let exact = map.spectral_norm(NormMode::Exact, tol)?;
        let power = map.spectral_norm(NormMode::Power, tol)?;
        worst_group = worst_group.max((exact - power).abs() / exact);
    }
    let mut bound_violations = 0;
    let mut tightest: f64 = f64::INFINITY;
    for _ in 0..20 {
        let dim = rng.random_range(2..=20);
        let edges = rng.random_range(1..=(dim * (dim - 1) / 2).min(40));
        let map = build_fusion_map(&random_graph(&mut rng, dim, edges)?, rng.random_range(0.1..3.0))?;
        let bound = map.spectral_norm(NormMode::Bound, tol)?;
        let power = map.spectral_norm(NormMode::Power, tol)?;
        tightest = tightest.min(bound / power);
        if bound < power * (1.0 - 1e-12) {
            bound_violations += 1;
        }
    }
    let single = build_fusion_map(
        &crate::model::FusionGraph::new(2, vec![crate::model::Edge { m: 0, l: 1, r: -0.7 }])?,
        1.3,
    )?;
    let (b, p) = (single.spectral_norm(NormMode::Bound, tol)?, single.spectral_norm(NormMode::Power, tol)?);
    let single_err = (b - p).abs() / p;
    debug_assert!(matches!(single.norm(), SpectralNorm::UpperBound(_)));
    Ok(Verdict {
        passed: worst_group <= 1e-8 && bound_violations == 0 && single_err <= 1e-10,
        detail: format!(
            "groups: worst closed-form vs power {worst_group:.1e}; graphs: {bound_violations} bound violations, min bound/power {tightest:.4}; single edge {single_err:.1e}"
        ),
    })
}

fn prox(_: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let resolution = 100_000;
    let (mut worst, mut nonzero_below, mut below) = (0.0f64, 0, 0);
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..3.0);
        let v: f64 = rng.random_range(-5.0..5.0);
        let out = soft_threshold(Array1::from(vec![v]).view(), t)[0];
        let grid = prox_1d_grid(v, t, resolution);
        let step = 2.0 * (v.abs() + t) / resolution as f64;
        worst = worst.max((out - grid).abs() / step);
        if v.abs() <= t {
            below += 1;
            if out.to_bits() != 0 {
                nonzero_below += 1;
            }
        }
    }
    Ok(Verdict {
        passed: worst <= 1.0 && nonzero_below == 0,
        detail: format!(
            "1000 pairs, worst |soft - grid| = {worst:.3} grid steps; {below} below threshold, {nonzero_below} not exactly +0"
        ),
    })
}

/// First iteration whose objective is within `eps` of `f_star`.
fn first_hit(trace: &[crate::model::TracePoint], f_star: f64, eps: f64) -> Option<usize> {
    trace.iter().position(|p| p.objective - f_star <= eps).map(|i| i + 1)
}

fn rate_slope(opts: &CheckOptions) -> Result<Verdict> {
    let spec = ChainSpec { group_size: 14, overlap: 2, noise_sd: 1.0, ..ChainSpec::new(2011, 40, 4) };
    let (problem, groups, _) = gen_overlap_chain(&spec)?;
    let problem = problem.with_precompute();
    let map = build_group_map(&groups, 2.0)?;
    let lambda = 2.0;
    let (_, reference) = reference_solve(&problem, &map, lambda, REFERENCE_MIN_BUDGET)?;
    let fine = spg_solve(
        &problem,
        &map,
        &SolverConfig { smoothing: Smoothing::Epsilon(1e-6), tol: 0.0, max_iter: 200_000, ..solver_config(lambda, opts) },
    )?;
    let f_star = reference.min(fine.objective);

    let epsilons = [1e-1, 1e-2, 1e-3];
    let mut counts = Vec::new();
    for &eps in &epsilons {
        let cfg = SolverConfig {
            smoothing: Smoothing::Mu(mu_from_epsilon(eps, map.d())?),
            tol: 0.0,
            max_iter: 400_000,
            record_trace: true,
            ..solver_config(lambda, opts)
        };
        let run = spg_solve(&problem, &map, &cfg)?;
        let trace = run.trace.unwrap_or_default();
        match first_hit(&trace, f_star, eps) {
            Some(it) => counts.push(it as f64),
            None => {
                return Ok(Verdict {
                    passed: false,
                    detail: format!("eps = {eps:e} not reached within {} iterations", cfg.max_iter),
                })
            }
        }
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(Verdict {
        passed: slope > 0.0 && slope <= 1.3,
        detail: format!("J = {}, iterations {:?} for eps 1e-1..1e-3, slope {slope:.3}", problem.j(), counts),
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn method_ordering(opts: &CheckOptions) -> Result<Verdict> {
    let mut lines = Vec::new();
    let mut passed = true;
    for (i, &g) in [2usize, 5, 10].iter().enumerate() {
        let spec = ChainSpec { group_size: 20, overlap: 2, ..ChainSpec::new(600 + i as u64, 200, g) };
        let (problem, groups, _) = gen_overlap_chain(&spec)?;
        let problem = problem.with_precompute();
        let reg = g as f64 / 5.0;
        let map = build_group_map(&groups, reg)?;

        // optimum estimate from two long runs of different method families
        let long_spg = spg_solve(
            &problem,
            &map,
            &SolverConfig { smoothing: Smoothing::Mu(1e-6), tol: 0.0, max_iter: 100_000, ..SolverConfig::with_lambda(reg) },
        )?;
        let long_sub = subgradient_solve(
            &problem,
            &map,
            &BaselineConfig { tol: 0.0, max_iter: 200_000, ..BaselineConfig::with_lambda(reg) },
        )?;
        let f_star = long_spg.objective.min(long_sub.objective);
        let target = Some(1.001 * f_star);

        let spg = spg_solve(&problem, &map, &SolverConfig { target_objective: target, ..solver_config(reg, opts) })?;
        let base = BaselineConfig { target_objective: target, ..BaselineConfig::with_lambda(reg) };
        let fobos = fobos_solve(&problem, &map, &base)?;
        let sub = subgradient_solve(&problem, &map, &base)?;
        let objs = [spg.objective, fobos.objective, sub.objective];
        let lo = objs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = objs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = hi / lo - 1.0;
        let ok = spg.converged && spg.iterations < sub.iterations && spread <= 0.01;
        passed &= ok;
        let mark = |r: &crate::model::SolveResult| if r.converged { "" } else { "+" };
        lines.push(format!(
            "|G|={g}: spg {}{}, fobos {}{}, subgrad {}{} it, spread {:.3}%",
            spg.iterations,
            mark(&spg),
            fobos.iterations,
            mark(&fobos),
            sub.iterations,
            mark(&sub),
            100.0 * spread
        ));
    }
    Ok(Verdict { passed, detail: lines.join("; ") + " (+ = stopped at max_iter)" })
}

fn multitask_reduction(opts: &CheckOptions) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let single = random_problem(&mut rng, 40, 12)?;
    let y = single.y().to_owned().insert_axis(ndarray::Axis(1));
    let mt = MultiTaskProblem::new(single.x().to_owned(), y, false)?;
    let base = build_group_map(&GroupStructure::new(1, vec![Group { members: vec![0], weight: 1.5 }])?, 0.8)?;
    let info = MultiTaskMapInfo::new(base, 12);
    let cfg = SolverConfig { record_trace: true, ..solver_config(0.7, opts) };
    let a = spg_solve_mt(&mt, &info, &cfg)?;
    let b = spg_solve(&single, &info.stacked_map(), &cfg)?;
    let (ta, tb) = (a.trace.unwrap_or_default(), b.trace.unwrap_or_default());
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
    let worst_trace = ta
        .iter()
        .zip(&tb)
        .map(|(p, q)| rel(p.objective, q.objective).max(rel(p.smoothed_objective, q.smoothed_objective)))
        .fold(0.0, f64::max);
    let worst_beta = max_abs(a.beta.column(0).iter().zip(&b.beta).map(|(p, q)| p - q)) / max_abs(b.beta.iter().copied()).max(1e-300);
    let same_len = a.iterations == b.iterations && ta.len() == tb.len();
    Ok(Verdict {
        passed: same_len && worst_trace <= 1e-12 && worst_beta <= 1e-12,
        detail: format!(
            "{} vs {} iterations, worst objective trace difference {worst_trace:.1e}, final coefficients {worst_beta:.1e}",
            a.iterations, b.iterations
        ),
    })
}

fn held_out_error(problem: &MultiTaskProblem, b: &Array2<f64>) -> f64 {
    let r = &problem.y() - &problem.x().dot(b);
    r.iter().map(|v| v * v).sum()
}

fn support_recovery(opts: &CheckOptions) -> Result<Verdict> {
    let grid = [8.0, 16.0, 32.0];
    let mut lasso_f1 = Vec::new();
    let mut gf_f1 = Vec::new();
    for seed in 0..10u64 {
        let spec = BlocksSpec::new(9000 + seed);
        let data = gen_multitask_blocks(&spec)?;
        let problem = data.problem.clone().with_precompute();
        let held_out = resample_blocks(&spec, &data.true_b, 19000 + seed)?;
        let graph = build_correlation_graph(problem.y(), GraphRule::TargetEdges((5 * spec.k()).min(spec.k() * (spec.k() - 1) / 2)))?;
        let fusion = build_fusion_map(&graph, 1.0)?;
        let mut best = [(f64::INFINITY, 0.0), (f64::INFINITY, 0.0)];
        for &reg in &grid {
            for (slot, gamma) in [(0usize, 0.0), (1, reg)] {
                let info = MultiTaskMapInfo::new(fusion.with_gamma(gamma), problem.j());
                let cfg = SolverConfig {
                    gamma: Some(gamma),
                    smoothing: Smoothing::Mu(1e-3),
                    tol: 1e-9,
                    max_iter: 50_000,
                    ..solver_config(reg, opts)
                };
                let fit = spg_solve_mt(&problem, &info, &cfg)?;
                if !fit.converged {
                    return Err(Error::InvalidConfig(format!("fit at seed {seed}, lambda {reg}, gamma {gamma} did not converge")));
                }
                let err = held_out_error(&held_out, &fit.beta);
                if err < best[slot].0 {
                    best[slot] = (err, support_f1(fit.beta.view(), data.true_b.view()));
                }
            }
        }
        lasso_f1.push(best[0].1);
        gf_f1.push(best[1].1);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ml, mg) = (mean(&lasso_f1), mean(&gf_f1));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(",");
    Ok(Verdict {
        passed: mg >= ml,
        detail: format!(
            "mean F1 gflasso {mg:.3} vs lasso {ml:.3}; per seed gflasso [{}] lasso [{}]",
            fmt(&gf_f1),
            fmt(&lasso_f1)
        ),
    })
}

fn solve_to_file(problem: &RegressionProblem, map: &PenaltyLinearMap, cfg: &SolverConfig) -> Result<String> {
    let r = spg_solve(problem, map, cfg)?;
    let config = serde_json::to_value(cfg).expect("config serializes");
    Ok(ResultFile::from_vector("spg", &r, config).to_json())
}

fn determinism(opts: &CheckOptions) -> Result<Verdict> {
    let spec = ChainSpec { group_size: 10, overlap: 2, ..ChainSpec::new(77, 60, 4) };
    let cfg = solver_config(1.0, opts);
    let mut files = Vec::new();
    for _ in 0..2 {
        let (problem, groups, _) = gen_overlap_chain(&spec)?;
        let map = build_group_map(&groups, 1.0)?;
        files.push((solve_to_file(&problem, &map, &cfg)?, problem, map));
    }
    let a = ResultFile::parse(&files[0].0, "result.json")?;
    let b = ResultFile::parse(&files[1].0, "result.json")?;
    let identical = a.objective.to_bits() == b.objective.to_bits()
        && a.smoothed_objective.to_bits() == b.smoothed_objective.to_bits()
        && a.iterations == b.iterations
        && a.converged == b.converged
        && a.beta == b.beta;
    let (_, problem, map) = &files[0];
    let single = eval_objective(problem, map, &a.beta_vector()?, cfg.lambda)?;
    let single_err = (single - a.objective).abs() / a.objective.abs();

    let blocks = BlocksSpec { j: 12, ..BlocksSpec::new(78) };
    let data = gen_multitask_blocks(&blocks)?;
    let graph = build_correlation_graph(data.problem.y(), GraphRule::TargetEdges(20))?;
    let info = MultiTaskMapInfo::new(build_fusion_map(&graph, 2.0)?, blocks.j);
    let fit = spg_solve_mt(&data.problem, &info, &solver_config(2.0, opts))?;
    let file = ResultFile::parse(
        &ResultFile::from_matrix("spg", &fit, serde_json::Value::Null).to_json(),
        "result.json",
    )?;
    let multi = eval_objective_mt(&data.problem, info.base(), &file.beta_matrix()?, 2.0)?;
    let multi_err = (multi - file.objective).abs() / file.objective.abs();
    Ok(Verdict {
        passed: identical && single_err <= 1e-9 && multi_err <= 1e-9,
        detail: format!(
            "repeat runs identical: {identical}; re-evaluated objective relative error {single_err:.1e} (single), {multi_err:.1e} (multi-task)"
        ),
    })
}
