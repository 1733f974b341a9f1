//! Browser bindings. Every entry point takes plain numbers and returns a JSON
//! string so the page needs no generated TypeScript glue beyond `JSON.parse`.

use ndarray::Array1;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use sprox::baselines::{fobos_solve, subgradient_solve, BaselineConfig};
use sprox::datagen::{gen_overlap_chain, support_f1, ChainSpec};
use sprox::model::{Group, GroupStructure, Smoothing, SolverConfig};
use sprox::penalty::build_group_map;
use sprox::spg_solve;

fn to_js<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Curve {
    t: Vec<f64>,
    exact: Vec<f64>,
    smoothed: Vec<f64>,
    gap_bound: f64,
}

/// Exact penalty `γ|t|` of a one-coefficient group next to its smooth
/// approximation, sampled on `[-half_width, half_width]`.
#[wasm_bindgen]
pub fn smoothing_curve(gamma: f64, mu: f64, half_width: f64, points: usize) -> Result<String, JsError> {
    if !(half_width > 0.0) || points < 2 {
        return Err(js_err("need half_width > 0 and at least 2 points"));
    }
    let groups = GroupStructure::new(1, vec![Group { members: vec![0], weight: 1.0 }]).map_err(js_err)?;
    let map = build_group_map(&groups, gamma).map_err(js_err)?;
    let mut curve = Curve { t: Vec::new(), exact: Vec::new(), smoothed: Vec::new(), gap_bound: mu * map.d() };
    for i in 0..points {
        let t = -half_width + 2.0 * half_width * i as f64 / (points - 1) as f64;
        let beta = Array1::from_elem(1, t);
        curve.t.push(t);
        curve.exact.push(map.exact_penalty(&beta).map_err(js_err)?);
        curve.smoothed.push(map.smoothed_eval(&beta, mu).map_err(js_err)?.value);
    }
    Ok(to_js(&curve))
}

#[derive(Serialize)]
struct ChainFit {
    beta: Vec<f64>,
    truth: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    support_f1: f64,
    trace: Vec<f64>,
}

fn small_chain(seed: u64, n: usize, num_groups: usize) -> ChainSpec {
    ChainSpec { group_size: 10, overlap: 2, ..ChainSpec::new(seed, n, num_groups) }
}

/// Generate a small overlapping-chain instance (groups of 10 sharing 2
/// coefficients) and solve it with the smoothing proximal gradient method.
#[wasm_bindgen]
pub fn solve_overlap_chain(
    seed: u64,
    n: usize,
    num_groups: usize,
    gamma: f64,
    lambda: f64,
    mu: f64,
) -> Result<String, JsError> {
    let (problem, groups, truth) = gen_overlap_chain(&small_chain(seed, n, num_groups)).map_err(js_err)?;
    let map = build_group_map(&groups, gamma).map_err(js_err)?;
    let cfg = SolverConfig {
        smoothing: Smoothing::Mu(mu),
        precompute_gram: true,
        record_trace: true,
        ..SolverConfig::with_lambda(lambda)
    };
    let fit = spg_solve(&problem, &map, &cfg).map_err(js_err)?;
    let fit_f1 = support_f1(fit.beta.view(), truth.view());
    Ok(to_js(&ChainFit {
        beta: fit.beta.to_vec(),
        truth: truth.to_vec(),
        objective: fit.objective,
        iterations: fit.iterations,
        converged: fit.converged,
        support_f1: fit_f1,
        trace: fit.trace.unwrap_or_default().iter().map(|p| p.objective).collect(),
    }))
}

#[derive(Serialize)]
struct MethodTrace {
    method: &'static str,
    objective: f64,
    iterations: usize,
    trace: Vec<f64>,
}

/// Objective traces of SPG, FOBOS and subgradient descent on the same chain
/// instance, each run for at most `max_iter` iterations with `γ = λ`.
#[wasm_bindgen]
pub fn compare_methods(seed: u64, n: usize, num_groups: usize, lambda: f64, max_iter: usize) -> Result<String, JsError> {
    let (problem, groups, _) = gen_overlap_chain(&small_chain(seed, n, num_groups)).map_err(js_err)?;
    let problem = problem.with_precompute();
    let map = build_group_map(&groups, lambda).map_err(js_err)?;
    let spg = SolverConfig { max_iter, record_trace: true, ..SolverConfig::with_lambda(lambda) };
    let base = BaselineConfig { max_iter, record_trace: true, ..BaselineConfig::with_lambda(lambda) };
    let runs = [
        ("spg", spg_solve(&problem, &map, &spg)),
        ("fobos", fobos_solve(&problem, &map, &base)),
        ("subgrad", subgradient_solve(&problem, &map, &base)),
    ];
    let mut out = Vec::new();
    for (method, run) in runs {
        let r = run.map_err(js_err)?;
        out.push(MethodTrace {
            method,
            objective: r.objective,
            iterations: r.iterations,
            trace: r.trace.unwrap_or_default().iter().map(|p| p.objective).collect(),
        });
    }
    Ok(to_js(&out))
}
