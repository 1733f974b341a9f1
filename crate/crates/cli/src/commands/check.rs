use std::process::ExitCode;

use sprox::checks::{self, CheckOptions};

use super::CliResult;
use crate::CheckArgs;

pub fn run(args: &CheckArgs) -> CliResult<ExitCode> {
    let selected = checks::select(args.filter.as_deref());
    if selected.is_empty() {
        return Err(format!("no check matches `{}`", args.filter.as_deref().unwrap_or_default()).into());
    }
    let opts = CheckOptions { lipschitz_scale: args.fuzz_lipschitz };
    let mut all = true;
    for check in selected {
        let outcome = check.run(&opts);
        println!("{outcome}");
        all &= outcome.passed;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
