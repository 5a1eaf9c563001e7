//! Mesh generators, experiment configuration, sweeps, refinement runs, the
//! invariant suite and report writers behind the command-line tool.

pub mod classical;
pub mod config;
pub mod dump;
pub mod mesh;
pub mod refine;
pub mod report;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, WeightSpec};
pub use mesh::{generate_mesh, MeshFamily, MeshSpec};
pub use report::ReportRow;
pub use sweep::{run_norm_sweep, SweepOutcome};
pub use dump::{basis_dump, BasisDump};
pub use refine::{run_refinement_experiment, RefineOutcome};
pub use verify::{run_verify_suite, VerifySummary};
