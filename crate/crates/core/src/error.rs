use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("patient {patient} demands service S{service} but no nurse is qualified for it")]
    NoQualifiedNurse { patient: usize, service: usize },
    #[error("generation error: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("service index {service} out of range (instance has {num_services} services)")]
    ServiceOutOfRange { service: usize, num_services: usize },
    #[error("patient {patient} out of range (instance has {num_patients} patients)")]
    PatientOutOfRange { patient: usize, num_patients: usize },
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("cannot build model: {0}")]
    Build(#[from] InstanceError),
    #[error("binary variable {name} has fractional value {value}")]
    Fractional { name: String, value: f64 },
    #[error("arc structure of nurse {nurse} is not a single path: {detail} (arcs: {})", arcs.join(", "))]
    Structure {
        nurse: usize,
        detail: String,
        arcs: Vec<String>,
    },
    #[error("missing value for variable {0}")]
    MissingValue(String),
    #[error("unknown variable {0} in solution file")]
    UnknownVariable(String),
    #[error("line {line}: {detail}")]
    SolutionFile { line: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance too large for exhaustive search: {tasks} tasks, {nurses} nurses (limit 8 tasks, 3 nurses)")]
    TooLarge { tasks: usize, nurses: usize },
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("no feasible insertion for task (P{patient},S{service})")]
    ConstructionFailed { patient: usize, service: usize },
    #[error("nurse {nurse} cannot be given any task without breaking feasibility")]
    IdleNurse { nurse: usize },
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot parse route `{route}`: {detail}")]
    RouteParse { route: String, detail: String },
    #[error("target service S{service} out of range (instance has {num_services} services)")]
    TargetOutOfRange { service: usize, num_services: usize },
    #[error("sweep needs at least one variant")]
    NoVariants,
    #[error("malformed solution file: {0}")]
    SolutionFile(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
