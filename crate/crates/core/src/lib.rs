//! Fourier analysis on `{-1,+1}^d` under product distributions, with low-degree and polynomial
//! regression learners, feature-subset selection, and exact enumeration oracles for small `d`.
//!
//! Randomness everywhere comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded explicitly.

pub mod data;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod fourier;
pub mod learners;
pub mod oracle;
pub mod selection;
pub mod subset;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use fourier::{FeatureMoments, FourierExpansion, ProductDistribution};
pub use learners::{SignPredictor, PredictorBody};
pub use subset::FeatureSubset;
