use std::fs;
use std::path::PathBuf;

use clap::Args;
use pacfourier::oracle::{
    erm_exhaustive, exact_popt, exact_projection, sandwich, ExactProblem, MAX_ERM_K,
};
use pacfourier::subset::enumerate_subsets;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{filled, subset_json, CommonArgs};
use crate::config::{resolve, Layered};
use crate::error::{CliError, CliResult};
use crate::report::{write_text, Run, RunReport};
use crate::source::DataOpts;

/// Tolerance for the Fourier and ERM routes to count as agreeing.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct OracleOpts {
    /// Exact problem JSON (biases plus a label table or channel)
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Junta size [default: 1]
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: DataOpts,
}

impl Layered for OracleOpts {
    fn defaults() -> Self {
        OracleOpts {
            problem: None,
            k: Some(1),
            source: DataOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct OracleCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub opts: OracleOpts,
}

fn load_problem(opts: &OracleOpts) -> CliResult<ExactProblem> {
    if let Some(path) = &opts.problem {
        if !path.is_file() {
            return Err(CliError::usage(format!("problem {} does not exist", path.display())));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("problem {}: {e}", path.display())));
    }
    if opts.source.data.is_some() {
        return Err(CliError::usage("the oracle needs --problem or a synthetic source, not --data"));
    }
    let spec = opts.source.synthetic_spec(0)?.expect("synthetic source");
    Ok(spec.exact_problem()?)
}

pub fn run(cmd: OracleCmd, mut run: Run) -> CliResult<RunReport> {
    let opts: OracleOpts = resolve(cmd.common.config.as_deref(), &cmd.opts)?;
    let k = filled(opts.k);
    let problem = load_problem(&opts)?;
    run.lap("load");

    let popt = exact_popt(&problem, k)?;
    let bounds = sandwich(&problem, k)?;
    let erm = if k <= MAX_ERM_K {
        let r = erm_exhaustive(&problem, k)?;
        json!({
            "error": r.error,
            "best_j": subset_json(r.best_j),
            "literal_scan_error": r.literal_scan_error,
            "agrees": (r.error - popt.popt).abs() <= AGREEMENT_TOL,
        })
    } else {
        Value::Null
    };
    run.lap("oracle");

    if let Some(path) = &cmd.common.csv {
        let mut text = String::from("subset,norm1,norm2_sq\n");
        for j in enumerate_subsets(problem.dim(), k)? {
            let proj = exact_projection(&problem, j)?;
            let norm1 = pacfourier::oracle::exact_projection_norm1(&problem, j)?;
            text.push_str(&format!("\"{j}\",{norm1},{}\n", proj.norm2_sq()));
        }
        write_text(path, &text)?;
        run.artifact("norms", path);
        run.lap("table");
    }
    let metrics = json!({
        "d": problem.dim(),
        "k": k,
        "popt": popt.popt,
        "argmax_j": subset_json(popt.argmax_j),
        "norm1": popt.norm1,
        "sandwich": bounds,
        "erm": erm,
    });
    Ok(run.finish(&opts, None, metrics, true))
}
