//! Problem data, tasks, routes and the closed-form endpoint rule.
//!
//! Node indexing follows one convention everywhere: `0` is the depot,
//! `1..=n` are patients and `n + 1` is the laboratory. Services are
//! indexed `0..S` internally and printed 1-based (`S1`, `S2`, ...).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{InstanceError, ModelError};

/// Slack used when comparing start times against windows and chained
/// arrival times.
pub const TIME_TOL: f64 = 1e-6;

/// Absolute tolerance for objective comparisons.
pub const OBJ_TOL: f64 = 1e-9;

/// The full problem datum.
///
/// Binary matrices are stored as `0`/`1` bytes so the interchange file
/// reads exactly like the data tables it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub name: String,
    pub num_patients: usize,
    pub num_nurses: usize,
    pub num_services: usize,
    /// `(n+2) x (n+2)`; row/column 0 is the depot, `n+1` the laboratory.
    pub travel_time: Vec<Vec<f64>>,
    /// `n x S`, indexed by `patient - 1`.
    pub service_duration: Vec<Vec<f64>>,
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
    /// `V x S`
    pub qualification: Vec<Vec<u8>>,
    /// `n x S`, indexed by `patient - 1`.
    pub demand: Vec<Vec<u8>>,
    pub start_req: Vec<u8>,
    pub end_req: Vec<u8>,
}

impl Instance {
    pub fn depot(&self) -> usize {
        0
    }

    pub fn lab(&self) -> usize {
        self.num_patients + 1
    }

    pub fn node_of(&self, endpoint: Endpoint) -> usize {
        match endpoint {
            Endpoint::Depot => self.depot(),
            Endpoint::Lab => self.lab(),
        }
    }

    pub fn travel(&self, from: usize, to: usize) -> f64 {
        self.travel_time[from][to]
    }

    /// Duration of `service` at `patient` (1-based patient id).
    pub fn duration(&self, patient: usize, service: usize) -> f64 {
        self.service_duration[patient - 1][service]
    }

    pub fn window(&self, patient: usize) -> (f64, f64) {
        (self.window_lo[patient - 1], self.window_hi[patient - 1])
    }

    pub fn is_qualified(&self, nurse: usize, service: usize) -> bool {
        self.qualification[nurse][service] == 1
    }

    pub fn demands(&self, patient: usize, service: usize) -> bool {
        patient >= 1
            && patient <= self.num_patients
            && service < self.num_services
            && self.demand[patient - 1][service] == 1
    }

    pub fn requires_lab_start(&self, service: usize) -> bool {
        self.start_req[service] == 1
    }

    pub fn requires_lab_end(&self, service: usize) -> bool {
        self.end_req[service] == 1
    }

    pub fn num_tasks(&self) -> usize {
        self.demand
            .iter()
            .map(|row| row.iter().filter(|&&g| g == 1).count())
            .sum()
    }

    /// Copy of the instance with every endpoint requirement cleared.
    pub fn without_endpoint_requirements(&self) -> Instance {
        let mut out = self.clone();
        out.start_req.iter_mut().for_each(|r| *r = 0);
        out.end_req.iter_mut().for_each(|r| *r = 0);
        out
    }

    /// Checks dimensions, value domains, windows and that every demanded
    /// service has a qualified nurse.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.num_patients;
        let v = self.num_nurses;
        let s = self.num_services;
        if n == 0 || v == 0 || s == 0 {
            return Err(InstanceError::Schema(
                "num_patients, num_nurses and num_services must be positive".into(),
            ));
        }
        check_matrix("travel_time", &self.travel_time, n + 2, n + 2)?;
        check_matrix("service_duration", &self.service_duration, n, s)?;
        check_len("window_lo", self.window_lo.len(), n)?;
        check_len("window_hi", self.window_hi.len(), n)?;
        check_matrix("qualification", &self.qualification, v, s)?;
        check_matrix("demand", &self.demand, n, s)?;
        check_len("start_req", self.start_req.len(), s)?;
        check_len("end_req", self.end_req.len(), s)?;

        for (i, row) in self.travel_time.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if !t.is_finite() || t < 0.0 {
                    return Err(InstanceError::Schema(format!(
                        "travel_time[{i}][{j}] = {t} is not a finite non-negative duration"
                    )));
                }
                if i == j && t != 0.0 {
                    return Err(InstanceError::Schema(format!(
                        "travel_time[{i}][{i}] = {t}, diagonal must be zero"
                    )));
                }
            }
        }
        for (i, row) in self.service_duration.iter().enumerate() {
            for (sv, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(InstanceError::Schema(format!(
                        "service_duration of patient {} service {} = {d} is not a finite non-negative duration",
                        i + 1,
                        sv + 1
                    )));
                }
            }
        }
        for i in 0..n {
            let (lo, hi) = (self.window_lo[i], self.window_hi[i]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(InstanceError::Schema(format!(
                    "time window of patient {} is not finite",
                    i + 1
                )));
            }
            if lo > hi {
                return Err(InstanceError::Schema(format!(
                    "time window of patient {} is empty: window_lo {lo} > window_hi {hi}",
                    i + 1
                )));
            }
        }
        check_binary("qualification", self.qualification.iter().flatten())?;
        check_binary("demand", self.demand.iter().flatten())?;
        check_binary("start_req", self.start_req.iter())?;
        check_binary("end_req", self.end_req.iter())?;

        for p in 1..=n {
            for sv in 0..s {
                if self.demands(p, sv) && !(0..v).any(|k| self.is_qualified(k, sv)) {
                    return Err(InstanceError::NoQualifiedNurse {
                        patient: p,
                        service: sv + 1,
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_len(field: &str, got: usize, want: usize) -> Result<(), InstanceError> {
    if got != want {
        return Err(InstanceError::Schema(format!(
            "{field} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

fn check_matrix<T>(field: &str, m: &[Vec<T>], rows: usize, cols: usize) -> Result<(), InstanceError> {
    check_len(field, m.len(), rows)?;
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(InstanceError::Schema(format!(
                "{field} row {i} has length {}, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(())
}

fn check_binary<'a>(field: &str, mut values: impl Iterator<Item = &'a u8>) -> Result<(), InstanceError> {
    if let Some(bad) = values.find(|&&b| b > 1) {
        return Err(InstanceError::Schema(format!(
            "{field} must contain only 0/1 entries, found {bad}"
        )));
    }
    Ok(())
}

/// One (patient, service) demand unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub patient: usize,
    pub service: usize,
    pub duration: f64,
    pub window: (f64, f64),
}

impl Task {
    pub fn key(&self) -> TaskKey {
        TaskKey {
            patient: self.patient,
            service: self.service,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P{},S{})", self.patient, self.service + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskKey {
    pub patient: usize,
    pub service: usize,
}

/// One task per demanded (patient, service), ordered by patient then service.
pub fn expand_tasks(instance: &Instance) -> Vec<Task> {
    let mut tasks = Vec::with_capacity(instance.num_tasks());
    for patient in 1..=instance.num_patients {
        for service in 0..instance.num_services {
            if instance.demand[patient - 1][service] == 1 {
                tasks.push(Task {
                    patient,
                    service,
                    duration: instance.duration(patient, service),
                    window: instance.window(patient),
                });
            }
        }
    }
    tasks
}

/// Expanded tasks plus the lookups every solver needs.
#[derive(Debug, Clone)]
pub struct TaskTable {
    pub tasks: Vec<Task>,
    id: Vec<Vec<Option<usize>>>,
}

impl TaskTable {
    pub fn new(instance: &Instance) -> Self {
        let tasks = expand_tasks(instance);
        let mut id = vec![vec![None; instance.num_services]; instance.num_patients + 1];
        for (t, task) in tasks.iter().enumerate() {
            id[task.patient][task.service] = Some(t);
        }
        TaskTable { tasks, id }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn id(&self, patient: usize, service: usize) -> Option<usize> {
        self.id.get(patient)?.get(service).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Depot,
    Lab,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Depot => f.write_str("Depot"),
            Endpoint::Lab => f.write_str("Lab"),
        }
    }
}

/// Whether route endpoints follow the service requirements or are pinned
/// to the depot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Flexible,
    Classic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Flexible => f.write_str("flexible"),
            Mode::Classic => f.write_str("classic"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flexible" => Ok(Mode::Flexible),
            "classic" => Ok(Mode::Classic),
            other => Err(format!("unknown mode `{other}`, expected flexible or classic")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Visit {
    /// 1-based patient id (the patient's node index).
    pub patient: usize,
    /// 0-based service index.
    pub service: usize,
    pub start_time: f64,
}

impl Visit {
    pub fn key(&self) -> TaskKey {
        TaskKey {
            patient: self.patient,
            service: self.service,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub nurse: usize,
    pub start: Endpoint,
    pub end: Endpoint,
    pub visits: Vec<Visit>,
}

impl Route {
    pub fn idle(nurse: usize) -> Self {
        Route {
            nurse,
            start: Endpoint::Depot,
            end: Endpoint::Depot,
            visits: Vec::new(),
        }
    }

    pub fn is_idle(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn services(&self) -> impl Iterator<Item = usize> + '_ {
        self.visits.iter().map(|v| v.service)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub objective: f64,
}

impl Solution {
    /// Builds a solution and fills in its objective.
    pub fn new(instance: &Instance, routes: Vec<Route>) -> Result<Self, ModelError> {
        let mut sol = Solution {
            routes,
            objective: 0.0,
        };
        sol.objective = objective(instance, &sol)?;
        Ok(sol)
    }

    /// Visit order as task keys, the tie-breaking key between equal-cost
    /// solutions.
    pub fn order_key(&self, table: &TaskTable) -> Vec<Vec<usize>> {
        self.routes
            .iter()
            .map(|r| {
                r.visits
                    .iter()
                    .map(|v| table.id(v.patient, v.service).unwrap_or(usize::MAX))
                    .collect()
            })
            .collect()
    }
}

/// Endpoints implied by a set of services: a route starts (ends) at the
/// laboratory iff one of its services requires it. No services means an
/// idle depot-to-depot route.
pub fn endpoint_requirements(
    instance: &Instance,
    services: impl IntoIterator<Item = usize>,
) -> Result<(Endpoint, Endpoint), ModelError> {
    let mut start = Endpoint::Depot;
    let mut end = Endpoint::Depot;
    for s in services {
        if s >= instance.num_services {
            return Err(ModelError::ServiceOutOfRange {
                service: s,
                num_services: instance.num_services,
            });
        }
        if instance.requires_lab_start(s) {
            start = Endpoint::Lab;
        }
        if instance.requires_lab_end(s) {
            end = Endpoint::Lab;
        }
    }
    Ok((start, end))
}

/// Endpoints a route must use under `mode`.
pub fn required_endpoints(
    instance: &Instance,
    mode: Mode,
    services: impl IntoIterator<Item = usize>,
) -> Result<(Endpoint, Endpoint), ModelError> {
    match mode {
        Mode::Flexible => endpoint_requirements(instance, services),
        Mode::Classic => {
            for s in services {
                if s >= instance.num_services {
                    return Err(ModelError::ServiceOutOfRange {
                        service: s,
                        num_services: instance.num_services,
                    });
                }
            }
            Ok((Endpoint::Depot, Endpoint::Depot))
        }
    }
}

/// Travel time of one route. Idle routes cost nothing.
pub fn route_cost(instance: &Instance, route: &Route) -> Result<f64, ModelError> {
    if route.visits.is_empty() {
        return Ok(0.0);
    }
    let mut prev = instance.node_of(route.start);
    let mut total = 0.0;
    for v in &route.visits {
        if v.patient == 0 || v.patient > instance.num_patients {
            return Err(ModelError::PatientOutOfRange {
                patient: v.patient,
                num_patients: instance.num_patients,
            });
        }
        if v.service >= instance.num_services {
            return Err(ModelError::ServiceOutOfRange {
                service: v.service,
                num_services: instance.num_services,
            });
        }
        total += instance.travel(prev, v.patient);
        prev = v.patient;
    }
    total += instance.travel(prev, instance.node_of(route.end));
    Ok(total)
}

/// Total travel time over all routes.
pub fn objective(instance: &Instance, solution: &Solution) -> Result<f64, ModelError> {
    solution
        .routes
        .iter()
        .map(|r| route_cost(instance, r))
        .sum()
}

/// Earliest start times for visiting `tasks` in order from `start`,
/// leaving the start node at time zero and waiting whenever a window
/// has not opened yet. `None` if some window closes before arrival.
pub fn earliest_schedule(instance: &Instance, start: Endpoint, tasks: &[Task]) -> Option<Vec<f64>> {
    let mut times = Vec::with_capacity(tasks.len());
    let mut loc = instance.node_of(start);
    let mut ready = 0.0;
    for task in tasks {
        let arrival = ready + instance.travel(loc, task.patient);
        let begin = arrival.max(task.window.0);
        if begin > task.window.1 + TIME_TOL {
            return None;
        }
        times.push(begin);
        ready = begin + task.duration;
        loc = task.patient;
    }
    Some(times)
}

/// Builds a route with earliest start times and mode-implied endpoints.
pub fn build_route(
    instance: &Instance,
    mode: Mode,
    nurse: usize,
    tasks: &[Task],
) -> Option<Route> {
    let (start, end) = required_endpoints(instance, mode, tasks.iter().map(|t| t.service)).ok()?;
    let times = earliest_schedule(instance, start, tasks)?;
    Some(Route {
        nurse,
        start,
        end,
        visits: tasks
            .iter()
            .zip(times)
            .map(|(t, start_time)| Visit {
                patient: t.patient,
                service: t.service,
                start_time,
            })
            .collect(),
    })
}
