//! Command-line workflows over the `qdf` library: exchangeability checks, de Finetti
//! reconstruction, cone factorization and the built-in qubit and coin demos.
//!
//! Exit codes: 0 success, 1 a law or invariant fails, 2 the input does not parse or
//! validate, 3 the sequence or cone is not representable over the chosen atoms.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod report;

pub use commands::{execute, run, Outcome};
pub use config::{Cli, Command, DemoName, Format};
pub use error::{CliError, Status};
pub use report::Report;
