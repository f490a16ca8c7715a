//! Full solution checker. Every violation is reported, tagged with the
//! constraint family of the formulation it breaks.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::model::{
    objective, required_endpoints, Endpoint, Instance, Mode, Solution, TaskKey, OBJ_TOL, TIME_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    /// Start endpoint disagrees with the start requirements (C2-C6).
    #[serde(rename = "C2-C6")]
    StartEndpoint,
    /// End endpoint disagrees with the end requirements (C7-C11).
    #[serde(rename = "C7-C11")]
    EndEndpoint,
    /// A visit starts before the previous one ends plus travel (C13).
    #[serde(rename = "C13")]
    Timing,
    /// A visit starts outside its patient's window (C14).
    #[serde(rename = "C14")]
    Window,
    /// A demanded task is missed or served more than once (C15).
    #[serde(rename = "C15")]
    Coverage,
    /// The nurse lacks the service qualification (C16).
    #[serde(rename = "C16")]
    Qualification,
    /// Reported objective differs from the recomputed travel time.
    #[serde(rename = "OBJ")]
    Objective,
    /// Malformed structure: route list, nurse ids or visits to tasks that
    /// are not demanded.
    #[serde(rename = "PARTITION")]
    Partition,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::StartEndpoint => "C2-C6",
            Tag::EndEndpoint => "C7-C11",
            Tag::Timing => "C13",
            Tag::Window => "C14",
            Tag::Coverage => "C15",
            Tag::Qualification => "C16",
            Tag::Objective => "OBJ",
            Tag::Partition => "PARTITION",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub tag: Tag,
    pub detail: String,
    pub nurse: Option<usize>,
    /// `(patient, service)` of the offending task, when there is one.
    pub task: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, tag: Tag) -> bool {
        self.violations.iter().any(|v| v.tag == tag)
    }

    pub fn tags(&self) -> Vec<Tag> {
        let mut tags: Vec<Tag> = self.violations.iter().map(|v| v.tag).collect();
        tags.sort();
        tags.dedup();
        tags
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "[{}] {}", v.tag, v.detail)?;
        }
        Ok(())
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, tag: Tag, nurse: Option<usize>, task: Option<(usize, usize)>, detail: String) {
        self.0.push(Violation {
            tag,
            detail,
            nurse,
            task,
        });
    }
}

pub fn validate(instance: &Instance, solution: &Solution, mode: Mode) -> ValidationReport {
    check(instance, solution, mode, false)
}

/// Like [`validate`], but every nurse must leave its start endpoint.
pub fn validate_strict(instance: &Instance, solution: &Solution, mode: Mode) -> ValidationReport {
    check(instance, solution, mode, true)
}

fn check(instance: &Instance, solution: &Solution, mode: Mode, strict: bool) -> ValidationReport {
    let mut out = Collector(Vec::new());
    let v = instance.num_nurses;

    if solution.routes.len() != v {
        out.push(
            Tag::Partition,
            None,
            None,
            format!("expected {v} routes, found {}", solution.routes.len()),
        );
    }
    let mut seen_nurse = vec![false; v];
    for (idx, route) in solution.routes.iter().enumerate() {
        if route.nurse >= v {
            out.push(
                Tag::Partition,
                Some(route.nurse),
                None,
                format!("route {idx} belongs to unknown nurse {}", route.nurse + 1),
            );
            continue;
        }
        if std::mem::replace(&mut seen_nurse[route.nurse], true) {
            out.push(
                Tag::Partition,
                Some(route.nurse),
                None,
                format!("nurse {} has more than one route", route.nurse + 1),
            );
        }
        if route.nurse != idx {
            out.push(
                Tag::Partition,
                Some(route.nurse),
                None,
                format!("route {idx} is listed for nurse {}", route.nurse + 1),
            );
        }
    }

    let mut served: HashMap<TaskKey, usize> = HashMap::new();
    for route in &solution.routes {
        let nurse = route.nurse;
        let known_nurse = nurse < v;
        let mut services = Vec::new();
        let mut loc = instance.node_of(route.start);
        let mut ready = 0.0_f64;
        for visit in &route.visits {
            let task = Some((visit.patient, visit.service));
            if !instance.demands(visit.patient, visit.service) {
                out.push(
                    Tag::Partition,
                    Some(nurse),
                    task,
                    format!(
                        "nurse {} visits (P{},S{}) which is not a demanded task",
                        nurse + 1,
                        visit.patient,
                        visit.service + 1
                    ),
                );
                continue;
            }
            services.push(visit.service);
            *served.entry(visit.key()).or_insert(0) += 1;
            if known_nurse && !instance.is_qualified(nurse, visit.service) {
                out.push(
                    Tag::Qualification,
                    Some(nurse),
                    task,
                    format!(
                        "nurse {} is not qualified for S{} at patient {}",
                        nurse + 1,
                        visit.service + 1,
                        visit.patient
                    ),
                );
            }
            let arrival = ready + instance.travel(loc, visit.patient);
            if !visit.start_time.is_finite() || visit.start_time < arrival - TIME_TOL {
                out.push(
                    Tag::Timing,
                    Some(nurse),
                    task,
                    format!(
                        "nurse {} starts (P{},S{}) at {} but cannot arrive before {}",
                        nurse + 1,
                        visit.patient,
                        visit.service + 1,
                        visit.start_time,
                        arrival
                    ),
                );
            }
            let (lo, hi) = instance.window(visit.patient);
            if !(visit.start_time >= lo - TIME_TOL && visit.start_time <= hi + TIME_TOL) {
                out.push(
                    Tag::Window,
                    Some(nurse),
                    task,
                    format!(
                        "start time {} of (P{},S{}) is outside window [{lo}, {hi}]",
                        visit.start_time,
                        visit.patient,
                        visit.service + 1
                    ),
                );
            }
            ready = visit.start_time + instance.duration(visit.patient, visit.service);
            loc = visit.patient;
        }

        // `services` only holds in-range indices, so this cannot fail.
        let (want_start, want_end) =
            required_endpoints(instance, mode, services.iter().copied()).unwrap_or((Endpoint::Depot, Endpoint::Depot));
        if route.start != want_start {
            out.push(
                Tag::StartEndpoint,
                Some(nurse),
                None,
                format!(
                    "nurse {} starts at {} but its services require {} ({mode} mode)",
                    nurse + 1,
                    route.start,
                    want_start
                ),
            );
        }
        if route.end != want_end {
            out.push(
                Tag::EndEndpoint,
                Some(nurse),
                None,
                format!(
                    "nurse {} ends at {} but its services require {} ({mode} mode)",
                    nurse + 1,
                    route.end,
                    want_end
                ),
            );
        }
        if strict && route.visits.is_empty() {
            out.push(
                Tag::StartEndpoint,
                Some(nurse),
                None,
                format!("nurse {} never leaves the depot", nurse + 1),
            );
        }
    }

    for patient in 1..=instance.num_patients {
        for service in 0..instance.num_services {
            if !instance.demands(patient, service) {
                continue;
            }
            let count = served
                .get(&TaskKey { patient, service })
                .copied()
                .unwrap_or(0);
            if count != 1 {
                out.push(
                    Tag::Coverage,
                    None,
                    Some((patient, service)),
                    format!(
                        "(P{patient},S{}) is served {count} times, expected exactly once",
                        service + 1
                    ),
                );
            }
        }
    }

    match objective(instance, solution) {
        Ok(total) => {
            if !((total - solution.objective).abs() <= OBJ_TOL) {
                out.push(
                    Tag::Objective,
                    None,
                    None,
                    format!(
                        "reported objective {} differs from recomputed {}",
                        solution.objective, total
                    ),
                );
            }
        }
        Err(e) => out.push(Tag::Objective, None, None, format!("objective cannot be evaluated: {e}")),
    }

    ValidationReport::from_violations(out.0)
}
