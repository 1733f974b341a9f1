use std::fs;

use serde::Serialize;
use sprox::datagen::{
    build_correlation_graph, gen_multitask_blocks, gen_overlap_chain, BlocksSpec, ChainSpec, GenSpec, GraphRule,
};
use sprox::io::{graph_to_json, groups_to_json, to_json_pretty, write_matrix_csv, write_vector_csv};

use super::CliResult;
use crate::{GenArgs, Kind};

/// `spec.json`: the generator spec plus the graph rule for multi-task data.
#[derive(Serialize)]
struct Provenance {
    #[serde(flatten)]
    spec: GenSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphProvenance>,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum GraphProvenance {
    TargetEdges(usize),
    Rho(f64),
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    fs::create_dir_all(&args.out)?;
    let out = |name: &str| args.out.join(name);
    match args.kind {
        Kind::OverlapChain => {
            let n = args.n.ok_or("--n is required for overlap-chain")?;
            let num_groups = args.num_groups.ok_or("--num-groups is required for overlap-chain")?;
            let spec = ChainSpec {
                seed: args.seed,
                n,
                num_groups,
                group_size: args.group_size,
                overlap: args.overlap,
                noise_sd: args.noise_sd,
            };
            let (problem, groups, beta) = gen_overlap_chain(&spec)?;
            write_matrix_csv(&out("X.csv"), problem.x())?;
            write_vector_csv(&out("y.csv"), problem.y())?;
            write_vector_csv(&out("beta_true.csv"), beta.view())?;
            fs::write(out("groups.json"), groups_to_json(&groups))?;
            let prov = Provenance { spec: GenSpec::OverlapChain(spec), graph: None };
            fs::write(out("spec.json"), to_json_pretty(&prov))?;
        }
        Kind::MultitaskBlocks => {
            let mut spec = BlocksSpec::new(args.seed);
            spec.n = args.n.unwrap_or(spec.n);
            spec.j = args.j.unwrap_or(spec.j);
            spec.blocks = args.blocks.clone().unwrap_or(spec.blocks);
            spec.effect_b = args.effect_b.unwrap_or(spec.effect_b);
            spec.noise_sd = args.noise_sd;
            spec.relevant_per_block = args.relevant_per_block.unwrap_or(spec.relevant_per_block);
            spec.cross_block = args.cross_block.unwrap_or(spec.cross_block);
            let data = gen_multitask_blocks(&spec)?;
            let k = spec.k();
            let (rule, prov) = match (args.target_edges, args.rho) {
                (_, Some(rho)) => (GraphRule::Threshold(rho), GraphProvenance::Rho(rho)),
                (Some(e), None) => (GraphRule::TargetEdges(e), GraphProvenance::TargetEdges(e)),
                (None, None) => {
                    let e = (5 * k).min(k * (k - 1) / 2);
                    (GraphRule::TargetEdges(e), GraphProvenance::TargetEdges(e))
                }
            };
            let graph = build_correlation_graph(data.problem.y(), rule)?;
            write_matrix_csv(&out("X.csv"), data.problem.x())?;
            write_matrix_csv(&out("Y.csv"), data.problem.y())?;
            write_matrix_csv(&out("beta_true.csv"), data.true_b.view())?;
            fs::write(out("graph.json"), graph_to_json(&graph))?;
            let prov = Provenance { spec: GenSpec::MultitaskBlocks(spec), graph: Some(prov) };
            fs::write(out("spec.json"), to_json_pretty(&prov))?;
        }
    }
    Ok(())
}
