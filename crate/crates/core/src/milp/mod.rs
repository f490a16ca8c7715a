//! Mixed-integer formulation over the task-expanded graph.
//!
//! Each demanded (patient, service) pair is a node. Per nurse there are
//! arcs from the depot and the laboratory to every task, between every
//! ordered pair of distinct tasks, from every task to the depot and the
//! laboratory, and an idle depot-to-depot arc. Start times are bounded
//! by the patient's window. In flexible mode two binaries per nurse pick
//! the laboratory as start and end. In classic mode the laboratory arcs
//! and indicators are left out.

mod extract;
mod lp;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::MilpError;
use crate::model::{Instance, Mode, TaskKey, TaskTable, TIME_TOL};

pub use extract::{extract_solution, parse_solution, read_solution_file, solution_to_assignment};
pub use lp::{export_lp, lp_to_string};

/// Tolerance on binaries when reading a solver's assignment.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Depot,
    Lab,
    Task(TaskKey),
}

impl Node {
    fn code(&self) -> String {
        match self {
            Node::Depot => "D".into(),
            Node::Lab => "L".into(),
            Node::Task(k) => format!("p{}s{}", k.patient, k.service + 1),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Depot => f.write_str("D"),
            Node::Lab => f.write_str("L"),
            Node::Task(k) => write!(f, "P{}s{}", k.patient, k.service + 1),
        }
    }
}

/// What a column stands for. Nurses are stored 0-based and shown 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarTag {
    Arc { from: Node, to: Node, nurse: usize },
    Start { task: TaskKey, nurse: usize },
    /// `which` is 1 for the start indicator and 2 for the end indicator.
    Delta { nurse: usize, which: u8 },
}

impl VarTag {
    /// LP-safe column name.
    pub fn name(&self) -> String {
        match self {
            VarTag::Arc { from, to, nurse } => format!("x_{}_{}_{}", from.code(), to.code(), nurse + 1),
            VarTag::Start { task, nurse } => format!("S_{}_{}", Node::Task(*task).code(), nurse + 1),
            VarTag::Delta { nurse, which } => format!("delta_{}_{}", nurse + 1, which),
        }
    }
}

impl fmt::Display for VarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarTag::Arc { from, to, nurse } => write!(f, "x[{from},{to},{}]", nurse + 1),
            VarTag::Start { task, nurse } => write!(f, "S[{},{}]", Node::Task(*task), nurse + 1),
            VarTag::Delta { nurse, which } => write!(f, "delta[{},{which}]", nurse + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub tag: VarTag,
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Constraint family, e.g. `C13` or `DEP`.
    pub family: &'static str,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    pub fn satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Two-way lookup between variable tags, LP names and column indices.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    tags: Vec<VarTag>,
    by_tag: HashMap<VarTag, usize>,
    by_name: HashMap<String, usize>,
}

impl VarMap {
    fn insert(&mut self, tag: VarTag) -> usize {
        let j = self.tags.len();
        self.tags.push(tag);
        let fresh = self.by_tag.insert(tag, j).is_none() && self.by_name.insert(tag.name(), j).is_none();
        assert!(fresh, "duplicate variable {tag}");
        j
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index(&self, tag: &VarTag) -> Option<usize> {
        self.by_tag.get(tag).copied()
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn tag(&self, index: usize) -> Option<&VarTag> {
        self.tags.get(index)
    }

    pub fn tags(&self) -> &[VarTag] {
        &self.tags
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub rows: usize,
    pub columns: usize,
    pub binaries: usize,
    pub nonzeros: usize,
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rows, {} columns ({} binary), {} nonzeros",
            self.rows, self.columns, self.binaries, self.nonzeros
        )
    }
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub name: String,
    pub mode: Mode,
    pub variables: Vec<Variable>,
    /// Minimized.
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
    /// Count bound used in the endpoint rows.
    pub big_m_count: f64,
    /// Horizon bound used in the timing rows.
    pub big_m_time: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MilpOptions {
    /// Leave out the idle arcs so every nurse must leave the depot or
    /// laboratory for at least one task.
    pub strict_all_nurses: bool,
}

/// A row or bound that an assignment breaks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowViolation {
    pub name: String,
    pub family: String,
    pub excess: f64,
}

impl LinearModel {
    pub fn stats(&self) -> ModelStats {
        ModelStats {
            rows: self.constraints.len(),
            columns: self.variables.len(),
            binaries: self.variables.iter().filter(|v| v.kind == VarKind::Binary).count(),
            nonzeros: self.constraints.iter().map(|c| c.terms.len()).sum(),
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * values[j]).sum()
    }

    /// Dense column values from a name-keyed assignment; absent columns
    /// are zero.
    pub fn dense(&self, vars: &VarMap, assignment: &BTreeMap<String, f64>) -> Result<Vec<f64>, MilpError> {
        let mut values = vec![0.0; self.variables.len()];
        for (name, &v) in assignment {
            let j = vars
                .index_of_name(name)
                .ok_or_else(|| MilpError::UnknownVariable(name.clone()))?;
            values[j] = v;
        }
        Ok(values)
    }

    /// Every broken row, bound and integrality requirement, by family.
    /// Bounds on start times report as `C14`, integrality as `BIN`.
    pub fn check(&self, values: &[f64], tol: f64) -> Vec<RowViolation> {
        let mut out = Vec::new();
        for (var, &x) in self.variables.iter().zip(values) {
            let below = var.lower - x;
            let above = x - var.upper;
            if below > tol || above > tol {
                let family = match var.tag {
                    VarTag::Start { .. } => "C14",
                    _ => "BOUND",
                };
                out.push(RowViolation {
                    name: var.name.clone(),
                    family: family.into(),
                    excess: below.max(above),
                });
            }
            if var.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                out.push(RowViolation {
                    name: var.name.clone(),
                    family: "BIN".into(),
                    excess: (x - x.round()).abs(),
                });
            }
        }
        for row in &self.constraints {
            if !row.satisfied(values, tol) {
                let lhs = row.activity(values);
                out.push(RowViolation {
                    name: row.name.clone(),
                    family: row.family.into(),
                    excess: (lhs - row.rhs).abs(),
                });
            }
        }
        out
    }

    /// Families of the broken rows, sorted and deduplicated.
    pub fn violated_families(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut fams: Vec<String> = self.check(values, tol).into_iter().map(|v| v.family).collect();
        fams.sort();
        fams.dedup();
        fams
    }
}

struct Builder {
    vars: VarMap,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn add(&mut self, tag: VarTag, kind: VarKind, lower: f64, upper: f64) -> usize {
        let j = self.vars.insert(tag);
        self.variables.push(Variable {
            tag,
            name: tag.name(),
            kind,
            lower,
            upper,
        });
        j
    }

    fn row(&mut self, family: &'static str, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name,
            family,
            terms,
            sense,
            rhs,
        });
    }
}

pub fn build_milp(instance: &Instance, mode: Mode) -> Result<(LinearModel, VarMap), MilpError> {
    build_milp_with(instance, mode, MilpOptions::default())
}

pub fn build_milp_with(
    instance: &Instance,
    mode: Mode,
    options: MilpOptions,
) -> Result<(LinearModel, VarMap), MilpError> {
    instance.validate()?;
    let table = TaskTable::new(instance);
    let tasks = &table.tasks;
    let n = instance.num_patients;
    let v = instance.num_nurses;
    let flexible = mode == Mode::Flexible;

    let big_m_count = ((n + 2) * (n + 2) * instance.num_services) as f64;
    let epsilon = 1.0 / (big_m_count + 1.0);
    let max_hi = instance.window_hi.iter().copied().fold(0.0, f64::max);
    let max_dur = instance.service_duration.iter().flatten().copied().fold(0.0, f64::max);
    let max_t = instance.travel_time.iter().flatten().copied().fold(0.0, f64::max);
    let big_m_time = max_hi + max_dur + max_t;

    let origins: Vec<Node> = if flexible { vec![Node::Depot, Node::Lab] } else { vec![Node::Depot] };
    let task_nodes: Vec<Node> = tasks.iter().map(|t| Node::Task(t.key())).collect();
    let node_patient = |node: &Node| match node {
        Node::Depot => instance.depot(),
        Node::Lab => instance.lab(),
        Node::Task(k) => k.patient,
    };

    let mut b = Builder {
        vars: VarMap::default(),
        variables: Vec::new(),
        constraints: Vec::new(),
    };
    let mut objective = Vec::new();

    // arcs[k] = (from, to, column)
    let mut arcs: Vec<Vec<(Node, Node, usize)>> = vec![Vec::new(); v];
    for (k, nurse_arcs) in arcs.iter_mut().enumerate() {
        let mut pairs: Vec<(Node, Node)> = Vec::new();
        if !options.strict_all_nurses {
            pairs.push((Node::Depot, Node::Depot));
        }
        for &o in &origins {
            for &t in &task_nodes {
                pairs.push((o, t));
            }
        }
        for &a in &task_nodes {
            for &c in &task_nodes {
                if a != c {
                    pairs.push((a, c));
                }
            }
        }
        for &t in &task_nodes {
            for &o in &origins {
                pairs.push((t, o));
            }
        }
        for (from, to) in pairs {
            let j = b.add(VarTag::Arc { from, to, nurse: k }, VarKind::Binary, 0.0, 1.0);
            let cost = instance.travel(node_patient(&from), node_patient(&to));
            if cost != 0.0 {
                objective.push((j, cost));
            }
            nurse_arcs.push((from, to, j));
        }
    }

    let mut start_col = vec![vec![0usize; tasks.len()]; v];
    for k in 0..v {
        for (t, task) in tasks.iter().enumerate() {
            start_col[k][t] = b.add(
                VarTag::Start {
                    task: task.key(),
                    nurse: k,
                },
                VarKind::Continuous,
                task.window.0,
                task.window.1,
            );
        }
    }

    let task_index: HashMap<TaskKey, usize> = tasks.iter().enumerate().map(|(t, task)| (task.key(), t)).collect();
    let task_of = |node: &Node| match node {
        Node::Task(key) => Some(task_index[key]),
        _ => None,
    };

    for k in 0..v {
        let kk = k + 1;
        let nurse_arcs = &arcs[k];
        let leaving = |o: Node| -> Vec<(usize, f64)> {
            nurse_arcs
                .iter()
                .filter(|(f, _, _)| *f == o)
                .map(|&(_, _, j)| (j, 1.0))
                .collect()
        };
        let entering = |o: Node| -> Vec<(usize, f64)> {
            nurse_arcs
                .iter()
                .filter(|(_, to, _)| *to == o)
                .map(|&(_, _, j)| (j, 1.0))
                .collect()
        };

        let mut dep = leaving(Node::Depot);
        let mut arr = entering(Node::Depot);
        if flexible {
            dep.extend(leaving(Node::Lab));
            arr.extend(entering(Node::Lab));
        }
        dep.sort_unstable_by_key(|&(j, _)| j);
        dep.dedup();
        arr.sort_unstable_by_key(|&(j, _)| j);
        arr.dedup();
        b.row("DEP", format!("DEP_{kk}"), dep, Sense::Eq, 1.0);
        b.row("ARR", format!("ARR_{kk}"), arr, Sense::Eq, 1.0);

        if flexible {
            for (which, flag) in [(1u8, &instance.start_req), (2u8, &instance.end_req)] {
                let d = b.add(VarTag::Delta { nurse: k, which }, VarKind::Binary, 0.0, 1.0);
                let flagged: Vec<usize> = nurse_arcs
                    .iter()
                    .filter(|(_, to, _)| matches!(to, Node::Task(key) if flag[key.service] == 1))
                    .map(|&(_, _, j)| j)
                    .collect();
                let (fam, lower_name, upper_name) = if which == 1 {
                    ("C2", format!("C2a_{kk}"), format!("C2b_{kk}"))
                } else {
                    ("C7", format!("C7a_{kk}"), format!("C7b_{kk}"))
                };
                let mut lower: Vec<(usize, f64)> = flagged.iter().map(|&j| (j, epsilon)).collect();
                lower.push((d, -1.0));
                b.row(fam, lower_name, lower, Sense::Le, 0.0);
                let mut upper: Vec<(usize, f64)> = vec![(d, 1.0)];
                upper.extend(flagged.iter().map(|&j| (j, -1.0)));
                b.row(fam, upper_name, upper, Sense::Le, 0.0);

                // depot side active when the indicator is 0, lab side when 1
                let (depot_sum, lab_sum, fams) = if which == 1 {
                    (leaving(Node::Depot), leaving(Node::Lab), ["C3", "C4", "C5", "C6"])
                } else {
                    (entering(Node::Depot), entering(Node::Lab), ["C8", "C9", "C10", "C11"])
                };
                let with = |sum: &[(usize, f64)], coef: f64| {
                    let mut row = sum.to_vec();
                    row.push((d, coef));
                    row
                };
                let m = big_m_count;
                b.row(fams[0], format!("{}_{kk}", fams[0]), with(&depot_sum, m), Sense::Ge, 1.0);
                b.row(fams[1], format!("{}_{kk}", fams[1]), with(&depot_sum, -m), Sense::Le, 1.0);
                // sum + M(1 - d) >= 1  <=>  sum - M d >= 1 - M
                b.row(fams[2], format!("{}_{kk}", fams[2]), with(&lab_sum, -m), Sense::Ge, 1.0 - m);
                // sum - M(1 - d) <= 1  <=>  sum + M d <= 1 + M
                b.row(fams[3], format!("{}_{kk}", fams[3]), with(&lab_sum, m), Sense::Le, 1.0 + m);
            }
        }

        for (t, &node) in task_nodes.iter().enumerate() {
            let code = node.code();
            let mut flow: Vec<(usize, f64)> = entering(node);
            flow.extend(leaving(node).into_iter().map(|(j, _)| (j, -1.0)));
            b.row("C12", format!("C12_{code}_{kk}"), flow, Sense::Eq, 0.0);

            let qualified = if instance.is_qualified(k, tasks[t].service) { 1.0 } else { 0.0 };
            b.row("C16", format!("C16_{code}_{kk}"), entering(node), Sense::Le, qualified);
        }

        for &(from, to, j) in nurse_arcs {
            let Some(tj) = task_of(&to) else {
                continue;
            };
            let leg = instance.travel(node_patient(&from), node_patient(&to));
            let sj = start_col[k][tj];
            let name = format!("C13_{}_{}_{kk}", from.code(), to.code());
            match task_of(&from) {
                // S_i + d_i + t_ij - M(1 - x) <= S_j
                Some(ti) => {
                    let si = start_col[k][ti];
                    let rhs = big_m_time - tasks[ti].duration - leg;
                    b.row("C13", name, vec![(si, 1.0), (sj, -1.0), (j, big_m_time)], Sense::Le, rhs);
                }
                // leaving the origin at time zero: t_oj - M(1 - x) <= S_j
                None => {
                    b.row("C13", name, vec![(sj, -1.0), (j, big_m_time)], Sense::Le, big_m_time - leg);
                }
            }
        }
    }

    for (t, task) in tasks.iter().enumerate() {
        let node = task_nodes[t];
        let mut terms = Vec::new();
        for k in 0..v {
            if !instance.is_qualified(k, task.service) {
                continue;
            }
            for &(_, to, j) in &arcs[k] {
                if to == node {
                    terms.push((j, 1.0));
                }
            }
        }
        b.row("C15", format!("C15_{}", node.code()), terms, Sense::Eq, 1.0);
    }

    let model = LinearModel {
        name: instance.name.clone(),
        mode,
        variables: b.variables,
        objective,
        constraints: b.constraints,
        big_m_count,
        big_m_time,
        epsilon,
    };
    debug_assert!(model.well_formed());
    Ok((model, b.vars))
}

impl LinearModel {
    fn well_formed(&self) -> bool {
        let cols = self.variables.len();
        let mut names: Vec<&str> = self.constraints.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        let unique = names.windows(2).all(|w| w[0] != w[1]);
        let refs_ok = self
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter())
            .chain(self.objective.iter())
            .all(|&(j, _)| j < cols);
        let binaries_ok = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .all(|v| v.lower == 0.0 && v.upper == 1.0);
        unique && refs_ok && binaries_ok
    }
}

/// Default tolerance for [`LinearModel::check`].
pub const CHECK_TOL: f64 = TIME_TOL;
