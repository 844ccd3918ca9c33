//! Robust estimation for the exponential power distribution: densities and
//! samplers, score families, estimating-equation and objective-based fits,
//! Fisher information, model selection and Monte Carlo experiments.

pub mod data;
pub mod epd;
pub mod error;
pub mod estimate;
pub mod fisher;
pub mod optimize;
pub mod rng;
pub mod scores;
pub mod select;
pub mod simulate;
pub mod special_fn;

pub use epd::{DeformationParams, EpdParams, Objective};
pub use error::{Error, Result};
pub use estimate::{fit, Estimate, FitConfig, FitResult, Method};
pub use fisher::{FisherMatrix, FisherMode};
pub use scores::{ScoreFamily, ShapeTriple};
pub use select::{SelectionReport, TuneConfig};
pub use simulate::{SimulationDesign, SimulationReport};
