//! CDCL SAT solving with learning-trace instrumentation.
//!
//! The solver in [`cdcl`] records, for every learnt clause, the set of variables its
//! derivation depended on. From a finished run, [`lsr`] extracts a
//! learning-sensitive-with-restarts backdoor upper bound, and [`absorption`] checks such
//! a bound independently by absorbing the recorded clauses into a fresh solver and
//! finishing the search with decisions restricted to the bound. [`sepgen`] generates an
//! ordered formula family whose backdoor size is sensitive to the branching order,
//! together with the order-displacement machinery for its lower bounds. [`structure`]
//! computes graph and backbone parameters of a formula, and [`harness`] runs corpora of
//! instances through solver and parameter pipelines and fits ridge models on the results.

pub mod absorption;
pub mod cdcl;
mod cli;
pub mod cnf;
pub mod harness;
pub mod lsr;
pub mod sepgen;
pub mod structure;
pub mod up;

pub use cli::cli_main;
