//! Home health care routing and scheduling where each nurse's route starts
//! and ends at the depot or the laboratory depending on the services it
//! contains.
//!
//! The crate provides the problem model and validator, a seeded instance
//! generator, a MILP builder with LP export, an exhaustive oracle, a
//! branch-and-bound solver, an insertion + local search heuristic, and the
//! classic-vs-flexible and sensitivity experiments.

pub mod error;
pub mod exact;
pub mod experiments;
pub mod heuristic;
pub mod instances;
pub mod milp;
pub mod model;
pub mod validate;

pub use error::{ExperimentError, InstanceError, MilpError, ModelError, SolveError};
pub use exact::{SolveOutcome, SolveStatus};
pub use model::{
    endpoint_requirements, expand_tasks, objective, Endpoint, Instance, Mode, Route, Solution, Task,
    TaskTable, Visit,
};
pub use validate::{validate, Tag, ValidationReport};
