//! Moving between solver assignments and routes.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use super::{LinearModel, Node, VarKind, VarMap, VarTag, INTEGRALITY_TOL};
use crate::error::MilpError;
use crate::model::{Endpoint, Instance, Route, Solution, TaskKey, Visit};

/// Reads `<name> <value>` lines. Blank lines and lines starting with `#`
/// or `\` are skipped.
pub fn parse_solution(text: &str) -> Result<BTreeMap<String, f64>, MilpError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let bad = |detail: String| MilpError::SolutionFile { line: i + 1, detail };
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(format!("expected `<name> <value>`, got `{line}`")));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| bad(format!("`{value}` is not a number")))?;
        if values.insert(name.to_string(), value).is_some() {
            return Err(bad(format!("variable {name} given twice")));
        }
    }
    Ok(values)
}

pub fn read_solution_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>, MilpError> {
    parse_solution(&fs::read_to_string(path)?)
}

fn endpoint_node(e: Endpoint) -> Node {
    match e {
        Endpoint::Depot => Node::Depot,
        Endpoint::Lab => Node::Lab,
    }
}

/// Rebuilds routes by following each nurse's active arcs from its
/// origin. Start times come from the start-time columns.
pub fn extract_solution(
    instance: &Instance,
    vars: &VarMap,
    assignment: &BTreeMap<String, f64>,
) -> Result<Solution, MilpError> {
    for name in assignment.keys() {
        if vars.index_of_name(name).is_none() {
            return Err(MilpError::UnknownVariable(name.clone()));
        }
    }
    let value = |tag: &VarTag| assignment.get(&tag.name()).copied();

    let mut active: Vec<Vec<(Node, Node)>> = vec![Vec::new(); instance.num_nurses];
    for tag in vars.tags() {
        if matches!(tag, VarTag::Start { .. }) {
            continue;
        }
        let x = value(tag).unwrap_or(0.0);
        let rounded = x.round();
        if (x - rounded).abs() > INTEGRALITY_TOL || !(rounded == 0.0 || rounded == 1.0) {
            return Err(MilpError::Fractional { name: tag.name(), value: x });
        }
        if let VarTag::Arc { from, to, nurse } = *tag {
            if rounded == 1.0 {
                active[nurse].push((from, to));
            }
        }
    }

    let mut routes = Vec::with_capacity(instance.num_nurses);
    for (k, arcs) in active.iter().enumerate() {
        let arc_names = || {
            arcs.iter()
                .map(|&(from, to)| VarTag::Arc { from, to, nurse: k }.to_string())
                .collect::<Vec<_>>()
        };
        let structure = |detail: &str| MilpError::Structure {
            nurse: k + 1,
            detail: detail.to_string(),
            arcs: arc_names(),
        };
        let idle = (Node::Depot, Node::Depot);
        if arcs.is_empty() || arcs == &[idle] {
            routes.push(Route::idle(k));
            continue;
        }
        if arcs.contains(&idle) {
            return Err(structure("idle arc used together with other arcs"));
        }
        let is_task = |n: &Node| matches!(n, Node::Task(_));
        let departures: Vec<&(Node, Node)> = arcs.iter().filter(|(f, _)| !is_task(f)).collect();
        if departures.len() != 1 {
            return Err(structure("expected exactly one departure from the depot or laboratory"));
        }
        let start = departures[0].0;
        let mut seen: HashSet<TaskKey> = HashSet::new();
        let mut order: Vec<TaskKey> = Vec::new();
        let mut used = 1;
        let mut at = departures[0].1;
        let end = loop {
            let Node::Task(key) = at else {
                break at;
            };
            if !seen.insert(key) {
                return Err(structure("a task is visited twice"));
            }
            order.push(key);
            let next: Vec<&(Node, Node)> = arcs.iter().filter(|(f, _)| *f == at).collect();
            if next.len() != 1 {
                return Err(structure("a task does not have exactly one successor"));
            }
            used += 1;
            at = next[0].1;
        };
        if used != arcs.len() {
            return Err(structure("arcs off the main path form a separate cycle"));
        }
        let mut visits = Vec::with_capacity(order.len());
        for key in order {
            let tag = VarTag::Start { task: key, nurse: k };
            let start_time = value(&tag).ok_or_else(|| MilpError::MissingValue(tag.name()))?;
            visits.push(Visit {
                patient: key.patient,
                service: key.service,
                start_time,
            });
        }
        let as_endpoint = |n: Node| if n == Node::Lab { Endpoint::Lab } else { Endpoint::Depot };
        routes.push(Route {
            nurse: k,
            start: as_endpoint(start),
            end: as_endpoint(end),
            visits,
        });
    }
    Ok(Solution::new(instance, routes)?)
}

/// The model assignment that encodes `solution`: its arcs, its start
/// times, indicators matching its endpoints, unvisited start times at
/// their lower bound and every other column at zero.
pub fn solution_to_assignment(
    model: &LinearModel,
    vars: &VarMap,
    solution: &Solution,
) -> Result<BTreeMap<String, f64>, MilpError> {
    let mut values: BTreeMap<String, f64> = model
        .variables
        .iter()
        .map(|v| {
            let x = if v.kind == VarKind::Continuous { v.lower } else { 0.0 };
            (v.name.clone(), x)
        })
        .collect();
    let mut set = |tag: VarTag, x: f64| -> Result<(), MilpError> {
        if vars.index(&tag).is_none() {
            return Err(MilpError::UnknownVariable(tag.name()));
        }
        values.insert(tag.name(), x);
        Ok(())
    };
    for route in &solution.routes {
        let k = route.nurse;
        if route.visits.is_empty() {
            let idle = VarTag::Arc {
                from: Node::Depot,
                to: Node::Depot,
                nurse: k,
            };
            if vars.index(&idle).is_some() {
                set(idle, 1.0)?;
            }
        } else {
            let mut prev = endpoint_node(route.start);
            for v in &route.visits {
                let node = Node::Task(v.key());
                set(VarTag::Arc { from: prev, to: node, nurse: k }, 1.0)?;
                set(VarTag::Start { task: v.key(), nurse: k }, v.start_time)?;
                prev = node;
            }
            set(
                VarTag::Arc {
                    from: prev,
                    to: endpoint_node(route.end),
                    nurse: k,
                },
                1.0,
            )?;
        }
        for (which, lab) in [(1u8, route.start == Endpoint::Lab), (2u8, route.end == Endpoint::Lab)] {
            let tag = VarTag::Delta { nurse: k, which };
            if vars.index(&tag).is_some() {
                set(tag, if lab { 1.0 } else { 0.0 })?;
            }
        }
    }
    Ok(values)
}
