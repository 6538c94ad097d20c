//! Configuration-driven experiments: assumption scans, heat and structural
//! convergence studies and the `C_d` analysis, written as tidy CSV tables
//! with a `manifest.json` of file hashes.

mod config;
mod output;
mod problem;
mod run;

pub use config::{
    AnalysisConfig, CdConfig, Conductivity, ExperimentConfig, ExperimentKind, NetworkSource, NetworkSpec, SolverConfig,
    StructuralConfig, LATERAL_DENSITY, SCHEMA_VERSION,
};
pub use output::{config_hash, Table};
pub use problem::{build_network, conductivities, Problem, StructuralLoad};
pub use run::{
    cd_constant, predicted_rate, run_experiment, violation_error, CdRow, ExperimentResult, NetworkRow, RateRow, ScanRow,
};
