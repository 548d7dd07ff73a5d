//! Shape-constrained least-squares refinement of an estimate with a fixed
//! number of internal peaks.

mod fit;
mod lm;
pub mod tangent;
mod template;

pub use fit::{fit, objective, FitConfig, FitResult};
pub use tangent::{decode_warping, encode_warping, TangentBasis, WarpCoefficients};
pub use template::{
    extract_template, initial_estimate, reduce_template, ExtremumKind, HeightVector, ShapeTemplate,
    TemplatePoint,
};
