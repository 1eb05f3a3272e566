use std::path::PathBuf;

use clap::Args;
use pacfourier::data::split;
use pacfourier::estimation::{
    ck_estimate, coefficient_deviation_bound, empirical_moments, two_norm_deviation_bound,
};
use pacfourier::learners::{bound_u, misclassification};
use pacfourier::oracle::{exact_error, exact_popt, predictor_support};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{filled, fit, subset_json, Algorithm, BasisKind, CommonArgs, FitPlan};
use crate::config::{resolve, Layered};
use crate::error::CliResult;
use crate::report::{write_text, Run, RunReport};
use crate::source::{stream_seed, DataOpts, SPLIT_STREAM};

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct TrainOpts {
    /// Learner [default: fourier]
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Degree bound [default: 2]
    #[arg(long)]
    pub k: Option<usize>,
    /// Basis for --algorithm basis [default: parity]
    #[arg(long, value_enum)]
    pub basis: Option<BasisKind>,
    /// Held-out fraction [default: 0.2]
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Failure probability used in the reported bounds [default: 0.05]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fit the fourier threshold by training error instead of using 0
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refit_threshold: Option<bool>,
    /// Run seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: DataOpts,
}

impl Layered for TrainOpts {
    fn defaults() -> Self {
        TrainOpts {
            algorithm: Some(Algorithm::Fourier),
            k: Some(2),
            basis: Some(BasisKind::Parity),
            test_fraction: Some(0.2),
            delta: Some(0.05),
            refit_threshold: Some(false),
            seed: Some(0),
            source: DataOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub opts: TrainOpts,
    /// Write the fitted predictor as JSON
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

pub fn run(cmd: TrainCmd, mut run: Run) -> CliResult<RunReport> {
    let opts: TrainOpts = resolve(cmd.common.config.as_deref(), &cmd.opts)?;
    let seed = filled(opts.seed);
    let plan = FitPlan {
        algorithm: filled(opts.algorithm),
        k: filled(opts.k),
        basis: filled(opts.basis),
        refit_threshold: filled(opts.refit_threshold),
    };
    let delta = filled(opts.delta);

    let loaded = opts.source.load(seed)?;
    let (train, test) = split(&loaded.data, filled(opts.test_fraction), stream_seed(seed, SPLIT_STREAM))?;
    run.lap("load");
    let model = fit(&train, &plan)?;
    run.lap("fit");

    let d = train.d();
    let k = plan.k;
    let train_error = misclassification(&model, &train)?;
    let test_error = misclassification(&model, &test)?;
    let problem = loaded.exact_problem()?;
    let exact_test_error = match &problem {
        Some(p) => Some(exact_error(p, &model)?.enumeration),
        None => None,
    };
    // The oracle is a reference value; a budget miss there should not sink the run.
    let popt = problem
        .as_ref()
        .and_then(|p| exact_popt(p, k.min(d)).ok())
        .map(|r| r.popt);
    let bounds = if (1..=d).contains(&k) {
        bound_metrics(&train, k, delta, popt)
    } else {
        Value::Null
    };
    run.lap("evaluate");

    if let Some(path) = &cmd.model_out {
        let text = serde_json::to_string_pretty(&model).expect("predictors serialize");
        write_text(path, &text)?;
        run.artifact("model", path);
    }
    let metrics = json!({
        "algorithm": plan.algorithm,
        "k": k,
        "d": d,
        "n_train": train.n(),
        "n_test": test.n(),
        "theta": model.theta,
        "support": subset_json(predictor_support(&model)),
        "train_error": train_error,
        "test_error": test_error,
        "exact_test_error": exact_test_error,
        "popt": popt,
        "bounds": bounds,
    });
    Ok(run.finish(&opts, Some(seed), metrics, true))
}

/// Deviation bounds at the training size, using `c_k` from the training moments.
fn bound_metrics(train: &pacfourier::LabeledDataset, k: usize, delta: f64, popt: Option<f64>) -> Value {
    let Ok(moments) = empirical_moments(train) else {
        return Value::Null;
    };
    let ck = ck_estimate(&moments, k);
    let (Ok(eps), Ok(two_norm)) = (
        coefficient_deviation_bound(train.n(), train.d(), k, delta, ck.value),
        two_norm_deviation_bound(train.n(), train.d(), k, delta, ck.value),
    ) else {
        return Value::Null;
    };
    let u = bound_u(two_norm).ok();
    json!({
        "delta": delta,
        "c_k": ck.value,
        "c_k_capped": ck.capped,
        "coefficient_epsilon": eps,
        "two_norm_epsilon": two_norm,
        "two_popt_plus_two_epsilon": popt.map(|p| 2.0 * p + 2.0 * eps),
        "u_of_two_norm_epsilon": u,
        "popt_plus_u": popt.zip(u).map(|(p, u)| p + u),
    })
}
