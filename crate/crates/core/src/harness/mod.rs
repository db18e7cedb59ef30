//! Experiment orchestration: run configuration, pipeline stages, artifact
//! output, and the acceptance checks, plus independent slow-path oracles
//! used to cross-validate the fast numerical kernels.

pub mod acceptance;
pub mod config;
pub mod oracles;
pub mod run;

pub use config::{ConfigError, MeshSource, RunConfig};
pub use run::{run_experiment, RunManifest, StageError, Verdict};
