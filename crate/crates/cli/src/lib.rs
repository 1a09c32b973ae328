//! Instance generation, single runs, the benchmark protocol and the
//! self-verification checks exposed by the `spatial-select` binary.

pub mod bench;
pub mod error;
pub mod instance;
pub mod run;
pub mod verify;

pub use bench::{bench, run_suite, BenchOutput, BenchmarkSuite, EscalationRow, EscalationStatus, RunRow};
pub use error::{CliError, Result};
pub use instance::{generate_instance, instance_hash, read_omega_csv};
pub use run::{run, MethodChoice, RunConfig, RunOutput};
pub use verify::{run_verify, VerifyOptions, VerifyReport};
