//! Chebyshev spline spaces built from extended complete Chebyshev systems:
//! B-spline bases, dual functionals, L² orthogonal projections and the
//! boundary constructions used to bound the projector in L∞.

pub mod banded;
pub mod bspline;
pub mod divided_diff;
pub mod ect;
pub mod error;
pub mod extremal;
pub mod harness;
pub mod jet;
pub mod partition;
pub mod projection;
pub mod quad;

pub use bspline::{BSplineBasis, Cutoff};
pub use divided_diff::{divided_difference, KnotTuple};
pub use ect::{DualSystem, EctSystem, Smooth, WeightSystem};
pub use error::{Error, Result};
pub use partition::Partition;
pub use projection::{assemble_gram, NormOptions, NormReport, ProjectionOperator};
pub use extremal::{build_phi, build_sigma, derive_sigma_weights, PhiFunction, SigmaSpline, SigmaSystem};
