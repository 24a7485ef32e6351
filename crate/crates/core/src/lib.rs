//! Makespan minimization for restricted assignment where every heavy job has
//! at most two eligible machines.
//!
//! The pipeline for one guessed makespan `t` is: reduce the instance
//! ([`preprocess`]), hand the reduced context to the core that matches the
//! regime of `t`, and either get an assignment back or a declaration that no
//! schedule of makespan `t` exists. [`search`] drives the guesses and
//! [`oracle`] provides exact answers for small instances.

pub mod certificate;
pub mod error;
pub mod general;
pub mod generate;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod outcome;
pub mod preprocess;
pub mod relief;
pub mod search;
pub mod trace;
pub mod two_valued;

pub use certificate::{Certificate, Declaration};
pub use error::{ModelError, OracleError, SolveError};
pub use model::{parse_instance, validate, IndexedInstance, Instance, ModeHint, Rational, SolveMode};
pub use search::{solve, Solution, SolveOptions, SolveReport};
