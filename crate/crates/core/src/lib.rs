//! Consistency checks for anisotropic spherical models built from an
//! augmented density `p₀,₀(Ψ, r²)`: Abel-type transforms, necessary
//! non-negativity conditions, and isotropic inversion.

// `!(x > 0.0)` is used deliberately so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod inversion;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod transforms;

pub use config::{Builtin, Format, GridSpec, ModelConfig, ModelSpec, PotentialSpec};
pub use diagnostics::{
    AnisotropyProfile, BbarClassification, BbarConvergence, ConditionId, ConditionReport, ReportStatus, SlopeProfile,
    Verdict,
};
pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use inversion::{eddington_invert, forward_moment, RecoveredDF};
pub use model::{
    AugmentedDensityModel, ConstantDf, DistributionFunction, EvaluationGrid, PotentialModel, PowerLawDf, SeparablePart,
};
pub use pipeline::{Command, Outcome};
pub use quadrature::{Quadrature, QuadratureSpec};
pub use transforms::{Line, TransformField, TransformValue};
