use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use sprox::baselines::{
    fobos_solve, fobos_solve_mt, subgradient_solve, subgradient_solve_mt, BaselineConfig,
};
use sprox::io::{read_graph_json, read_groups_json, read_matrix_csv, ResultFile};
use sprox::model::{MultiTaskProblem, RegressionProblem, Smoothing, SolverConfig};
use sprox::multitask::{spg_solve_mt, MultiTaskMapInfo};
use sprox::penalty::{build_fusion_map, build_group_map, PenaltyLinearMap};
use sprox::solver::spg_solve;

use super::CliResult;
use crate::{Method, SolveArgs};

fn locate(explicit: &Option<PathBuf>, dir: Option<&Path>, names: &[&str]) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| dir.and_then(|d| names.iter().map(|n| d.join(n)).find(|p| p.exists())))
}

enum Structure {
    Groups(PathBuf),
    Graph(PathBuf),
    None,
}

fn structure(args: &SolveArgs) -> CliResult<Structure> {
    if let Some(p) = &args.groups {
        return Ok(Structure::Groups(p.clone()));
    }
    if let Some(p) = &args.graph {
        return Ok(Structure::Graph(p.clone()));
    }
    let dir = args.data.as_deref();
    match (locate(&None, dir, &["groups.json"]), locate(&None, dir, &["graph.json"])) {
        (Some(_), Some(_)) => Err("data directory has both groups.json and graph.json; pass --groups or --graph".into()),
        (Some(g), None) => Ok(Structure::Groups(g)),
        (None, Some(g)) => Ok(Structure::Graph(g)),
        (None, None) => Ok(Structure::None),
    }
}

fn build_map(structure: &Structure, dim: usize, gamma: f64) -> CliResult<PenaltyLinearMap> {
    let map = match structure {
        Structure::Groups(p) => build_group_map(&read_groups_json(p)?, gamma)?,
        Structure::Graph(p) => build_fusion_map(&read_graph_json(p)?, gamma)?,
        Structure::None => PenaltyLinearMap::empty(dim),
    };
    if map.dim() != dim {
        return Err(format!("structure has dimension {} but the problem needs {dim}", map.dim()).into());
    }
    Ok(map)
}

pub fn run(args: &SolveArgs) -> CliResult<ExitCode> {
    let dir = args.data.as_deref();
    let x_path = locate(&args.x, dir, &["X.csv"]).ok_or("no design matrix: pass --x or --data")?;
    let y_path = locate(&args.y, dir, &["Y.csv", "y.csv"]).ok_or("no response: pass --y or --data")?;
    let x = read_matrix_csv(&x_path)?;
    let y = read_matrix_csv(&y_path)?;
    let structure = structure(args)?;
    let smoothing = Smoothing::from_options(args.mu, args.epsilon)?;
    let multitask = args.multitask || y.ncols() > 1;

    let spg_config = SolverConfig {
        lambda: args.lambda,
        gamma: Some(args.gamma),
        smoothing,
        tol: args.tol,
        max_iter: args.max_iter,
        target_objective: args.target_objective,
        precompute_gram: args.precompute_gram,
        record_trace: args.trace,
        lipschitz_scale: 1.0,
    };
    let base_config = BaselineConfig {
        step_c: args.step_c,
        lambda: args.lambda,
        gamma: Some(args.gamma),
        max_iter: args.max_iter,
        tol: args.tol,
        target_objective: args.target_objective,
        record_trace: args.trace,
    };
    if args.method != Method::Spg && (args.mu.is_some() || args.epsilon.is_some()) {
        eprintln!("note: --mu/--epsilon only affect --method spg");
    }
    let (name, echo) = match args.method {
        Method::Spg => ("spg", serde_json::to_value(&spg_config)?),
        Method::Fobos => ("fobos", serde_json::to_value(&base_config)?),
        Method::Subgrad => ("subgrad", serde_json::to_value(&base_config)?),
    };

    let mut file = if multitask {
        let mut problem = MultiTaskProblem::new(x, y, false)?;
        let gram_seconds = precompute(args.precompute_gram, || problem.precompute());
        let info = MultiTaskMapInfo::new(build_map(&structure, problem.k(), args.gamma)?, problem.j());
        let result = match args.method {
            Method::Spg => spg_solve_mt(&problem, &info, &spg_config)?,
            Method::Fobos => fobos_solve_mt(&problem, &info, &base_config)?,
            Method::Subgrad => subgradient_solve_mt(&problem, &info, &base_config)?,
        };
        ResultFile { gram_seconds, ..ResultFile::from_matrix(name, &result, echo) }
    } else {
        let y = y.column(0).to_owned();
        let mut problem = RegressionProblem::new(x, y, false)?;
        let gram_seconds = precompute(args.precompute_gram, || problem.precompute());
        let map = build_map(&structure, problem.j(), args.gamma)?;
        let result = match args.method {
            Method::Spg => spg_solve(&problem, &map, &spg_config)?,
            Method::Fobos => fobos_solve(&problem, &map, &base_config)?,
            Method::Subgrad => subgradient_solve(&problem, &map, &base_config)?,
        };
        ResultFile { gram_seconds, ..ResultFile::from_vector(name, &result, echo) }
    };
    if !args.trace {
        file.trace = None;
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, file.to_json())?;
    println!(
        "{}: objective {:.10e}, {} iterations, {}",
        name,
        file.objective,
        file.iterations,
        if file.converged { "converged" } else { "stopped at max_iter" }
    );
    Ok(if file.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn precompute(enabled: bool, f: impl FnOnce()) -> Option<f64> {
    enabled.then(|| {
        let start = Instant::now();
        f();
        start.elapsed().as_secs_f64()
    })
}
