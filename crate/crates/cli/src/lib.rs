//! Command-line front end for `dirac-thermo`: config-driven runs, parameter
//! sweeps and the verification suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod check;
pub mod config;
mod error;
pub mod run;
pub mod sweep;

pub use check::{check_builtin, check_subject, CheckTolerances, Subject, VerificationReport};
pub use config::RunConfig;
pub use error::{CliError, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER};
pub use run::{execute, RunReport};
