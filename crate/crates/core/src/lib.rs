//! Shape and function estimation for functional data observed under both
//! additive and phase (time-warping) noise.
//!
//! The pipeline has two stages. Penalized elastic alignment over a grid of
//! elasticity weights produces a family of partially aligned means; tracking
//! their internal peaks across that family (the peak-persistence diagram)
//! gives the number of significant peaks and the smallest weight that
//! realises it. The second stage fits the best function with exactly that
//! many peaks to the partially aligned data, optionally with pointwise
//! bootstrap bands.

pub mod align;
pub mod bootstrap;
pub mod calculus;
pub mod error;
pub mod grid;
pub mod pipeline;
pub mod ppd;
pub mod shapefit;
pub mod simulate;
pub mod srvf;
pub mod warping;

pub use align::{
    cross_sectional_mean, multiple_align, pairwise_align, penalized_l2_align, pinching_score,
    AlignConfig, AlignmentResult, L2Config, SlopeSet, Step,
};
pub use bootstrap::{bootstrap_band, BootstrapConfig, ConfidenceBand};
pub use error::{Error, Result};
pub use grid::{FunctionSample, FunctionSet, Grid, Srvf};
pub use pipeline::{estimate, fit_at_lambda_star, initial_from_mean, Estimate, EstimateConfig};
pub use ppd::{build_ppd, ppd_barchart, ppd_surface, PeakTrack, PpdConfig, PpdResult};
pub use shapefit::{extract_template, fit, initial_estimate, FitConfig, FitResult, ShapeTemplate};
pub use simulate::{generate, Scenario, ScenarioId};
pub use srvf::{from_srvf, to_srvf, warp_srvf};
pub use warping::{invert_warping, warp_function, Warping, WarpingInverse};
