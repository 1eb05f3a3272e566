use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pacfourier::data::{save_csv, save_json};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{filled, subset_json, CommonArgs};
use crate::config::{resolve, Layered};
use crate::error::{CliError, CliResult};
use crate::report::{Run, RunReport};
use crate::source::{DataOpts, EncodingArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct GenOpts {
    /// Dataset file to write
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format [default: from the extension, csv otherwise]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// CSV cell encoding [default: pm1]
    #[arg(long, value_enum)]
    pub write_encoding: Option<EncodingArg>,
    /// Write a CSV header line [default: true]
    #[arg(long)]
    pub header: Option<bool>,
    /// Run seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: DataOpts,
}

impl Layered for GenOpts {
    fn defaults() -> Self {
        GenOpts {
            output: None,
            format: None,
            write_encoding: Some(EncodingArg::Pm1),
            header: Some(true),
            seed: Some(0),
            source: DataOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct GenCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub opts: GenOpts,
}

pub fn run(cmd: GenCmd, mut run: Run) -> CliResult<RunReport> {
    let opts: GenOpts = resolve(cmd.common.config.as_deref(), &cmd.opts)?;
    let seed = filled(opts.seed);
    let output = opts
        .output
        .clone()
        .ok_or_else(|| CliError::usage("gen needs --output"))?;
    if opts.source.data.is_some() {
        return Err(CliError::usage("gen emits synthetic data; --data is not a source here"));
    }
    let format = opts.format.unwrap_or_else(|| {
        if output.extension().is_some_and(|e| e == "json") {
            Format::Json
        } else {
            Format::Csv
        }
    });
    if format == Format::Csv && filled(opts.write_encoding) == EncodingArg::Auto {
        return Err(CliError::usage("--write-encoding must be pm1 or zero_one"));
    }
    let loaded = opts.source.load(seed)?;
    run.lap("generate");
    let data = &loaded.data;
    match format {
        Format::Csv => save_csv(&output, data, filled(opts.write_encoding).into(), filled(opts.header))?,
        Format::Json => save_json(&output, data)?,
    }
    run.artifact("dataset", &output);
    run.lap("write");

    let spec = loaded.spec.as_ref().expect("synthetic source");
    let positive = data.labels().iter().filter(|&&y| y > 0).count();
    let metrics = json!({
        "n": data.n(),
        "d": data.d(),
        "format": format,
        "label_rule": spec.label_rule,
        "noise_rate": spec.noise_rate,
        "biases": spec.biases(),
        "relevant": subset_json(spec.label_rule.relevant(spec.d)),
        "positive_rate": positive as f64 / data.n() as f64,
        "column_bias": data.column_bias(),
    });
    Ok(run.finish(&opts, Some(seed), metrics, true))
}
