use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pacfourier::estimation::empirical_moments;
use pacfourier::learners::{
    fit_fourier_with, fit_generic_basis, fit_l2_polyreg, FourierOptions, GenericBasis,
};
use pacfourier::{FeatureSubset, LabeledDataset, SignPredictor};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;

pub mod gen;
pub mod oracle;
pub mod select;
pub mod train;
pub mod verify;

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// JSON file of options; explicit flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the command's table as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Add wall-clock timings to the report (reports then differ between runs)
    #[arg(long)]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Empirical parity coefficients up to degree k
    Fourier,
    /// Least-squares polynomial in the raw coordinates with a fitted threshold
    L2reg,
    /// Least squares over an explicit basis (see --basis)
    Basis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Parity,
    Monomial,
}

pub struct FitPlan {
    pub algorithm: Algorithm,
    pub k: usize,
    pub basis: BasisKind,
    pub refit_threshold: bool,
}

pub fn fit(data: &LabeledDataset, plan: &FitPlan) -> CliResult<SignPredictor> {
    let model = match plan.algorithm {
        Algorithm::Fourier => fit_fourier_with(
            data,
            plan.k,
            &FourierOptions {
                refit_threshold: plan.refit_threshold,
                moment_fraction: None,
            },
        )?,
        Algorithm::L2reg => fit_l2_polyreg(data, plan.k)?,
        Algorithm::Basis => {
            let basis = match plan.basis {
                BasisKind::Parity => GenericBasis::parities(empirical_moments(data)?, plan.k)?,
                BasisKind::Monomial => GenericBasis::monomials(data.d(), plan.k)?,
            };
            fit_generic_basis(data, basis)?
        }
    };
    Ok(model)
}

pub fn subset_json(s: FeatureSubset) -> Value {
    serde_json::to_value(s).expect("subsets serialize as index lists")
}

/// Unwraps an option the defaults layer always fills.
pub(crate) fn filled<T>(v: Option<T>) -> T {
    v.expect("filled by the defaults layer")
}
