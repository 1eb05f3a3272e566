use std::fs::File;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pacfourier::data::split;
use pacfourier::learners::misclassification;
use pacfourier::oracle::{exact_error, exact_popt};
use pacfourier::selection::{select_with, ScoreMethod, SearchMethod, SelectOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{filled, subset_json, CommonArgs};
use crate::config::{resolve, Layered};
use crate::error::{CliError, CliResult};
use crate::report::{write_text, Run, RunReport};
use crate::source::{stream_seed, DataOpts, SPLIT_STREAM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScoreArg {
    /// Leave-one-out mean absolute projection
    Score1,
    /// Sum of squared coefficients
    Score2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SearchArg {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct SelectOpts {
    /// Subset score [default: score1]
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    /// Search strategy [default: exhaustive]
    #[arg(long, value_enum)]
    pub search: Option<SearchArg>,
    /// Subset size [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Score 1 without leaving each row out
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub naive_score1: Option<bool>,
    /// Held-out fraction [default: 0.2]
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Run seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: DataOpts,
}

impl Layered for SelectOpts {
    fn defaults() -> Self {
        SelectOpts {
            score: Some(ScoreArg::Score1),
            search: Some(SearchArg::Exhaustive),
            k: Some(3),
            naive_score1: Some(false),
            test_fraction: Some(0.2),
            seed: Some(0),
            source: DataOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SelectCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub opts: SelectOpts,
    /// Write the predictor on the chosen subset as JSON
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

pub fn run(cmd: SelectCmd, mut run: Run) -> CliResult<RunReport> {
    let opts: SelectOpts = resolve(cmd.common.config.as_deref(), &cmd.opts)?;
    let seed = filled(opts.seed);
    let k = filled(opts.k);
    let select_opts = SelectOptions {
        method: match filled(opts.score) {
            ScoreArg::Score1 => ScoreMethod::Score1,
            ScoreArg::Score2 => ScoreMethod::Score2,
        },
        search: match filled(opts.search) {
            SearchArg::Exhaustive => SearchMethod::Exhaustive,
            SearchArg::Greedy => SearchMethod::Greedy,
        },
        naive_score1: filled(opts.naive_score1),
        keep_scores: cmd.common.csv.is_some(),
    };

    let loaded = opts.source.load(seed)?;
    let (train, test) = split(&loaded.data, filled(opts.test_fraction), stream_seed(seed, SPLIT_STREAM))?;
    run.lap("load");
    let report = select_with(&train, k, &select_opts)?;
    run.lap("select");

    let model = &report.predictor;
    let planted = loaded.spec.as_ref().map(|s| s.label_rule.relevant(s.d));
    let problem = loaded.exact_problem()?;
    let exact_test_error = match &problem {
        Some(p) => Some(exact_error(p, model)?.enumeration),
        None => None,
    };
    let popt = problem.as_ref().and_then(|p| exact_popt(p, k).ok()).map(|r| r.popt);
    let metrics = json!({
        "score": select_opts.method,
        "search": select_opts.search,
        "k": k,
        "d": train.d(),
        "n_train": train.n(),
        "n_test": test.n(),
        "chosen": subset_json(report.chosen),
        "chosen_score": report.score,
        "planted": planted.map(subset_json),
        "chosen_is_planted": planted.map(|p| p == report.chosen),
        "train_error": misclassification(model, &train)?,
        "test_error": misclassification(model, &test)?,
        "exact_test_error": exact_test_error,
        "popt": popt,
        "two_popt_one_minus_popt": popt.map(|p| 2.0 * p * (1.0 - p)),
    });
    run.lap("evaluate");

    if let Some(path) = &cmd.common.csv {
        let file = File::create(path)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
        report.write_scores_csv(file)?;
        run.artifact("scores", path);
    }
    if let Some(path) = &cmd.model_out {
        write_text(path, &serde_json::to_string_pretty(model).expect("predictors serialize"))?;
        run.artifact("model", path);
    }
    Ok(run.finish(&opts, Some(seed), metrics, true))
}
