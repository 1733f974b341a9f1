//! Benchmark sweeps: every expanded instance is solved by every listed
//! method and reported as one CSV row, in config order.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use sprox::baselines::{
    fobos_solve, fobos_solve_mt, subgradient_solve, subgradient_solve_mt, BaselineConfig,
};
use sprox::datagen::{
    build_correlation_graph, gen_multitask_blocks, gen_overlap_chain, BlocksSpec, ChainSpec, GraphRule,
};
use sprox::io::read_json;
use sprox::model::{SolveResult, SolverConfig, Smoothing, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sprox::multitask::{spg_solve_mt, MultiTaskMapInfo};
use sprox::penalty::{build_fusion_map, build_group_map};
use sprox::solver::spg_solve;

use super::CliResult;
use crate::BenchArgs;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn opt_values<T: Clone>(v: &Option<OneOrMany<T>>, default: T) -> Vec<T> {
    v.as_ref().map_or_else(|| vec![default], OneOrMany::values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BenchMethod {
    Spg,
    Fobos,
    Subgrad,
}

impl BenchMethod {
    fn name(self) -> &'static str {
        match self {
            BenchMethod::Spg => "spg",
            BenchMethod::Fobos => "fobos",
            BenchMethod::Subgrad => "subgrad",
        }
    }
}

/// One entry of `instances`; list-valued fields are swept as a Cartesian
/// product.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum InstanceConfig {
    OverlapChain {
        seed: u64,
        n: OneOrMany<usize>,
        num_groups: OneOrMany<usize>,
        group_size: Option<usize>,
        overlap: Option<usize>,
        noise_sd: Option<f64>,
        gamma: OneOrMany<f64>,
        lambda: OneOrMany<f64>,
    },
    MultitaskBlocks {
        seed: u64,
        n: Option<OneOrMany<usize>>,
        j: Option<OneOrMany<usize>>,
        blocks: Option<Vec<usize>>,
        effect_b: Option<f64>,
        noise_sd: Option<f64>,
        target_edges: Option<usize>,
        rho: Option<f64>,
        gamma: OneOrMany<f64>,
        lambda: OneOrMany<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    instances: Vec<InstanceConfig>,
    methods: Vec<BenchMethod>,
    mu: Option<f64>,
    epsilon: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    /// Step scale c for the baselines.
    step_c: Option<f64>,
    #[serde(default)]
    precompute_gram: bool,
}

#[derive(Debug, Clone)]
enum Data {
    Chain(ChainSpec),
    Blocks(BlocksSpec, GraphRule),
}

#[derive(Debug, Clone)]
struct Instance {
    data: Data,
    gamma: f64,
    lambda: f64,
}

fn expand(configs: &[InstanceConfig]) -> Vec<Instance> {
    let mut out = Vec::new();
    for cfg in configs {
        match cfg {
            InstanceConfig::OverlapChain { seed, n, num_groups, group_size, overlap, noise_sd, gamma, lambda } => {
                for g in num_groups.values() {
                    for n in n.values() {
                        for gamma in gamma.values() {
                            for lambda in lambda.values() {
                                let mut spec = ChainSpec::new(*seed, n, g);
                                spec.group_size = group_size.unwrap_or(spec.group_size);
                                spec.overlap = overlap.unwrap_or(spec.overlap);
                                spec.noise_sd = noise_sd.unwrap_or(spec.noise_sd);
                                out.push(Instance { data: Data::Chain(spec), gamma, lambda });
                            }
                        }
                    }
                }
            }
            InstanceConfig::MultitaskBlocks { seed, n, j, blocks, effect_b, noise_sd, target_edges, rho, gamma, lambda } => {
                let defaults = BlocksSpec::new(*seed);
                for j in opt_values(j, defaults.j) {
                    for n in opt_values(n, defaults.n) {
                        for gamma in gamma.values() {
                            for lambda in lambda.values() {
                                let mut spec = defaults.clone();
                                spec.n = n;
                                spec.j = j;
                                spec.blocks = blocks.clone().unwrap_or(spec.blocks);
                                spec.effect_b = effect_b.unwrap_or(spec.effect_b);
                                spec.noise_sd = noise_sd.unwrap_or(spec.noise_sd);
                                let k = spec.k();
                                let rule = match (rho, target_edges) {
                                    (Some(r), _) => GraphRule::Threshold(*r),
                                    (None, Some(e)) => GraphRule::TargetEdges(*e),
                                    (None, None) => GraphRule::TargetEdges((5 * k).min(k * k.saturating_sub(1) / 2)),
                                };
                                out.push(Instance { data: Data::Blocks(spec, rule), gamma, lambda });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

struct Row {
    method: &'static str,
    penalty: &'static str,
    n: usize,
    j: usize,
    k: usize,
    gamma: f64,
    lambda: f64,
    iterations: usize,
    cpu_seconds: f64,
    objective: f64,
    status: String,
}

impl Row {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:?},{:?},{},{:.6},{:?},{}",
            self.method,
            self.penalty,
            self.n,
            self.j,
            self.k,
            self.gamma,
            self.lambda,
            self.iterations,
            self.cpu_seconds,
            self.objective,
            self.status.replace([',', '\n'], ";")
        )
    }
}

const HEADER: &str = "method,penalty,N,J,K,gamma,lambda,iterations,cpu_seconds,objective,status";

struct Settings {
    spg: SolverConfig,
    baseline: BaselineConfig,
}

fn status<T>(r: &SolveResult<T>) -> String {
    if r.converged { "converged".into() } else { "max_iter".into() }
}

fn run_one(inst: &Instance, method: BenchMethod, s: &Settings) -> Row {
    let spg = SolverConfig { lambda: inst.lambda, gamma: Some(inst.gamma), ..s.spg.clone() };
    let base = BaselineConfig { lambda: inst.lambda, gamma: Some(inst.gamma), ..s.baseline.clone() };
    let mut row = Row {
        method: method.name(),
        penalty: "group",
        n: 0,
        j: 0,
        k: 1,
        gamma: inst.gamma,
        lambda: inst.lambda,
        iterations: 0,
        cpu_seconds: 0.0,
        objective: f64::NAN,
        status: String::new(),
    };
    let outcome: sprox::Result<(usize, f64, f64, String)> = (|| match &inst.data {
        Data::Chain(spec) => {
            let (mut problem, groups, _) = gen_overlap_chain(spec)?;
            row.n = problem.n();
            row.j = problem.j();
            if s.spg.precompute_gram {
                problem.precompute();
            }
            let map = build_group_map(&groups, inst.gamma)?;
            let r = match method {
                BenchMethod::Spg => spg_solve(&problem, &map, &spg)?,
                BenchMethod::Fobos => fobos_solve(&problem, &map, &base)?,
                BenchMethod::Subgrad => subgradient_solve(&problem, &map, &base)?,
            };
            Ok((r.iterations, r.wall_seconds, r.objective, status(&r)))
        }
        Data::Blocks(spec, rule) => {
            let data = gen_multitask_blocks(spec)?;
            let mut problem = data.problem;
            row.penalty = "fusion";
            row.n = problem.n();
            row.j = problem.j();
            row.k = problem.k();
            let graph = build_correlation_graph(problem.y(), *rule)?;
            if s.spg.precompute_gram {
                problem.precompute();
            }
            let info = MultiTaskMapInfo::new(build_fusion_map(&graph, inst.gamma)?, problem.j());
            let r = match method {
                BenchMethod::Spg => spg_solve_mt(&problem, &info, &spg)?,
                BenchMethod::Fobos => fobos_solve_mt(&problem, &info, &base)?,
                BenchMethod::Subgrad => subgradient_solve_mt(&problem, &info, &base)?,
            };
            Ok((r.iterations, r.wall_seconds, r.objective, status(&r)))
        }
    })();
    match outcome {
        Ok((iterations, seconds, objective, st)) => {
            row.iterations = iterations;
            row.cpu_seconds = seconds;
            row.objective = objective;
            row.status = st;
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

fn threads() -> usize {
    std::env::var("SPROX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(1)
}

pub fn run(args: &BenchArgs) -> CliResult<ExitCode> {
    let config: BenchConfig = read_json(&args.config)?;
    if config.methods.is_empty() {
        return Err("config lists no methods".into());
    }
    let smoothing = Smoothing::from_options(config.mu, config.epsilon)?;
    let settings = Settings {
        spg: SolverConfig {
            smoothing,
            tol: config.tol.unwrap_or(DEFAULT_TOL),
            max_iter: config.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            precompute_gram: config.precompute_gram,
            ..SolverConfig::default()
        },
        baseline: BaselineConfig {
            step_c: config.step_c,
            tol: config.tol.unwrap_or(DEFAULT_TOL),
            max_iter: config.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            ..BaselineConfig::default()
        },
    };
    let instances = expand(&config.instances);
    let jobs: Vec<(usize, BenchMethod)> = (0..instances.len())
        .flat_map(|i| config.methods.iter().map(move |&m| (i, m)))
        .collect();

    let slots: Vec<Mutex<Option<Row>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads().min(jobs.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, method)) = jobs.get(idx) else { break };
                let row = run_one(&instances[i], method, &settings);
                *slots[idx].lock().expect("unpoisoned") = Some(row);
            });
        }
    });
    let rows: Vec<Row> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every job ran"))
        .collect();

    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for row in &rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out.push_str("# summary\n# instance,penalty,N,J,K,gamma,lambda,best_method,best_objective\n");
    let per = config.methods.len();
    for (i, chunk) in rows.chunks(per).enumerate() {
        let best = chunk
            .iter()
            .filter(|r| r.objective.is_finite())
            .min_by(|a, b| a.objective.total_cmp(&b.objective));
        let r = &chunk[0];
        let (method, obj) = best.map_or(("none", f64::NAN), |b| (b.method, b.objective));
        writeln!(
            out,
            "# {},{},{},{},{},{:?},{:?},{},{:?}",
            i + 1,
            r.penalty,
            r.n,
            r.j,
            r.k,
            r.gamma,
            r.lambda,
            method,
            obj
        )
        .expect("writing to a String");
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, out)?;
    let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
    println!("{} runs written to {}; {failed} errored", rows.len(), args.out.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
