use clap::Args;
use pacfourier::data::generate;
use pacfourier::estimation::{ck_estimate, coefficient_deviation_bound};
use pacfourier::oracle::{exact_error, exact_popt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{filled, fit, subset_json, Algorithm, BasisKind, CommonArgs, FitPlan};
use crate::config::{resolve, Layered};
use crate::error::{CliError, CliResult};
use crate::report::{write_text, Run, RunReport};
use crate::source::{stream_seed, DataOpts, CELL_STREAM_BASE};

/// Round-off allowance on the `mean >= Popt - 2 MC std` check, which is exact when every seed
/// reaches Popt.
const FLOOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct VerifyOpts {
    /// Learner [default: fourier]
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Degree bound, also the junta size for Popt [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Basis for --algorithm basis [default: parity]
    #[arg(long, value_enum)]
    pub basis: Option<BasisKind>,
    /// Sample sizes to sweep [default: 256,512,...,65536]
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Datasets per sample size [default: 20]
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Failure probability for the deviation bound [default: 0.05]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Additive slack on the 2 Popt + 2 eps check [default: 0.02]
    #[arg(long)]
    pub slack: Option<f64>,
    /// Fraction of runs per size that must meet the bound [default: 0.95]
    #[arg(long)]
    pub min_bound_fraction: Option<f64>,
    /// Largest acceptable log-log regret slope [default: -0.3]
    #[arg(long, allow_hyphen_values = true)]
    pub max_slope: Option<f64>,
    /// Smallest acceptable R^2 of the regret fit [default: 0.8]
    #[arg(long)]
    pub min_r2: Option<f64>,
    /// Run seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: DataOpts,
}

impl Layered for VerifyOpts {
    fn defaults() -> Self {
        VerifyOpts {
            algorithm: Some(Algorithm::Fourier),
            k: Some(3),
            basis: Some(BasisKind::Parity),
            grid: Some((8..=16).map(|e| 1 << e).collect()),
            seeds: Some(20),
            delta: Some(0.05),
            slack: Some(0.02),
            min_bound_fraction: Some(0.95),
            max_slope: Some(-0.3),
            min_r2: Some(0.8),
            seed: Some(0),
            source: DataOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct VerifyCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub opts: VerifyOpts,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub mean_error: f64,
    pub std_error: f64,
    /// Standard error of the mean across seeds.
    pub mc_std: f64,
    pub regret: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub bound_fraction: f64,
    pub above_floor: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares line through `(ln x, ln y)` over the pairs with `y > 0`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: pts.len(),
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn run(cmd: VerifyCmd, mut run: Run) -> CliResult<RunReport> {
    let opts: VerifyOpts = resolve(cmd.common.config.as_deref(), &cmd.opts)?;
    let seed = filled(opts.seed);
    let grid = opts.grid.clone().unwrap_or_default();
    let seeds = filled(opts.seeds);
    if grid.is_empty() {
        return Err(CliError::usage("empty grid: give at least one sample size"));
    }
    if let Some(n) = grid.iter().find(|&&n| n < 2) {
        return Err(CliError::usage(format!("grid size {n} is below 2")));
    }
    if seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let plan = FitPlan {
        algorithm: filled(opts.algorithm),
        k: filled(opts.k),
        basis: filled(opts.basis),
        refit_threshold: false,
    };
    let k = plan.k;
    let delta = filled(opts.delta);
    let slack = filled(opts.slack);

    if opts.source.data.is_some() {
        return Err(CliError::usage("verify needs a synthetic source, not --data"));
    }
    let spec = opts.source.synthetic_spec(seed)?.expect("synthetic source");
    let problem = spec.exact_problem()?;
    let d = spec.d;
    if k == 0 || k > d {
        return Err(CliError::usage(format!("k = {k} must lie in 1..={d}")));
    }
    let popt = exact_popt(&problem, k)?;
    let ck = ck_estimate(&problem.dist().moments(), k);
    run.lap("oracle");

    let cells: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&n| (0..seeds).map(move |s| (n, s)))
        .collect();
    let errors: Vec<f64> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, _))| {
            let mut cell = spec.clone();
            cell.n = n;
            cell.seed = stream_seed(seed, CELL_STREAM_BASE + idx as u64);
            let data = generate(&cell)?;
            let model = fit(&data, &plan)?;
            Ok(exact_error(&problem, &model)?.enumeration)
        })
        .collect::<CliResult<_>>()?;
    run.lap("sweep");

    let mut points = Vec::with_capacity(grid.len());
    for (i, &n) in grid.iter().enumerate() {
        let errs = &errors[i * seeds..(i + 1) * seeds];
        let (mean, std) = mean_std(errs);
        let mc_std = std / (seeds as f64).sqrt();
        let epsilon = coefficient_deviation_bound(n, d, k, delta, ck.value)?;
        let bound = 2.0 * popt.popt + 2.0 * epsilon;
        let within = errs.iter().filter(|&&e| e <= bound + slack).count();
        points.push(GridPoint {
            n,
            mean_error: mean,
            std_error: std,
            mc_std,
            regret: mean - popt.popt,
            epsilon,
            bound,
            bound_fraction: within as f64 / seeds as f64,
            above_floor: mean >= popt.popt - 2.0 * mc_std - FLOOR_TOL,
        });
    }
    let fit_line = loglog_fit(
        &points.iter().map(|p| p.n as f64).collect::<Vec<_>>(),
        &points.iter().map(|p| p.regret).collect::<Vec<_>>(),
    );

    let floor_ok = points.iter().all(|p| p.above_floor);
    let bound_ok = points
        .iter()
        .all(|p| p.bound_fraction >= filled(opts.min_bound_fraction));
    let slope_ok = fit_line.is_some_and(|f| f.slope <= filled(opts.max_slope));
    let r2_ok = fit_line.is_some_and(|f| f.r2 >= filled(opts.min_r2));
    let passed = floor_ok && bound_ok && slope_ok && r2_ok;

    if let Some(path) = &cmd.common.csv {
        let mut text =
            String::from("n,mean_error,std_error,mc_std,regret,epsilon,bound,bound_fraction,above_floor\n");
        for p in &points {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.n, p.mean_error, p.std_error, p.mc_std, p.regret, p.epsilon, p.bound, p.bound_fraction,
                p.above_floor
            ));
        }
        write_text(path, &text)?;
        run.artifact("curve", path);
    }

    let metrics = json!({
        "algorithm": plan.algorithm,
        "k": k,
        "d": d,
        "seeds": seeds,
        "popt": popt.popt,
        "popt_subset": subset_json(popt.argmax_j),
        "c_k": ck.value,
        "c_k_capped": ck.capped,
        "points": points,
        "regret_fit": fit_line,
        "checks": {
            "above_floor": floor_ok,
            "within_bound": bound_ok,
            "slope": slope_ok,
            "r2": r2_ok,
        },
    });
    run.lap("report");
    Ok(run.finish(&opts, Some(seed), metrics, passed))
}
