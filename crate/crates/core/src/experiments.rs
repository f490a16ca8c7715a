//! Solver dispatch, the classic-vs-flexible comparison, the endpoint
//! requirement sweep, route rendering and the solution and table files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, SolveError};
use crate::exact::{solve_bnb_with, solve_bruteforce_with, BnbOptions, SearchLimits, SolveStatus};
use crate::heuristic::{self, HeuristicConfig};
use crate::model::{Endpoint, Instance, Mode, Route, Solution, Visit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Heuristic,
    Bruteforce,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exact => "exact",
            SolverKind::Heuristic => "heuristic",
            SolverKind::Bruteforce => "bruteforce",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "heuristic" => Ok(SolverKind::Heuristic),
            "bruteforce" => Ok(SolverKind::Bruteforce),
            other => Err(format!("unknown solver `{other}`, expected exact, heuristic or bruteforce")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub solver: SolverKind,
    pub time_limit: Duration,
    pub node_limit: u64,
    pub threads: usize,
    pub strict_all_nurses: bool,
    /// Heuristic seed.
    pub seed: u64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            solver: SolverKind::Exact,
            time_limit: Duration::from_secs(300),
            node_limit: u64::MAX,
            threads: 1,
            strict_all_nurses: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    /// Lower bound, when the solver proves one.
    pub bound: Option<f64>,
    pub nodes_explored: u64,
    /// Seconds.
    pub wall_time: f64,
}

/// Runs the chosen solver. A heuristic that finds nothing reports
/// [`SolveStatus::Unknown`]; a heuristic solution is never reported as
/// optimal.
pub fn run_solver(instance: &Instance, mode: Mode, settings: &SolveSettings) -> Result<RunResult, SolveError> {
    instance.validate()?;
    let strict = settings.strict_all_nurses;
    match settings.solver {
        SolverKind::Exact => {
            let opts = BnbOptions {
                limits: SearchLimits {
                    time_limit: settings.time_limit,
                    node_limit: settings.node_limit,
                    incumbent: None,
                },
                strict_all_nurses: strict,
                threads: settings.threads.max(1),
                ..BnbOptions::default()
            };
            let out = solve_bnb_with(instance, mode, &opts);
            Ok(RunResult {
                status: out.status,
                bound: out.bound.is_finite().then_some(out.bound),
                solution: out.solution,
                nodes_explored: out.nodes_explored,
                wall_time: out.wall_time,
            })
        }
        SolverKind::Bruteforce => {
            let out = solve_bruteforce_with(instance, mode, strict)?;
            Ok(RunResult {
                status: out.status,
                bound: out.bound.is_finite().then_some(out.bound),
                solution: out.solution,
                nodes_explored: out.nodes_explored,
                wall_time: out.wall_time,
            })
        }
        SolverKind::Heuristic => {
            let clock = Instant::now();
            let cfg = HeuristicConfig {
                seed: settings.seed,
                ..HeuristicConfig::default()
            };
            let (status, solution) = match heuristic::solve(instance, mode, strict, &cfg) {
                Ok(sol) => (SolveStatus::Feasible, Some(sol)),
                Err(SolveError::ConstructionFailed { .. } | SolveError::IdleNurse { .. }) => (SolveStatus::Unknown, None),
                Err(e) => return Err(e),
            };
            Ok(RunResult {
                status,
                solution,
                bound: None,
                nodes_explored: 0,
                wall_time: clock.elapsed().as_secs_f64(),
            })
        }
    }
}

// ---------------------------------------------------------------------
// route rendering

/// `Depot → S1 → 3 → S4 → 7 → Lab`: each visit is its 1-based service
/// followed by its patient. Idle routes render as `Depot → Depot`.
pub fn render_route(route: &Route) -> String {
    let mut out = route.start.to_string();
    for v in &route.visits {
        let _ = write!(out, " → S{} → {}", v.service + 1, v.patient);
    }
    let _ = write!(out, " → {}", route.end);
    out
}

fn parse_endpoint(token: &str) -> Option<Endpoint> {
    match token {
        "Depot" | "D" => Some(Endpoint::Depot),
        "Lab" | "L" => Some(Endpoint::Lab),
        _ => None,
    }
}

/// Parses [`render_route`] output (`->` is accepted for `→`) and assigns
/// earliest start times, waiting for windows to open.
pub fn parse_route(instance: &Instance, nurse: usize, text: &str) -> Result<Route, ExperimentError> {
    let bad = |detail: String| ExperimentError::RouteParse {
        route: text.to_string(),
        detail,
    };
    let tokens: Vec<&str> = text.split(['→']).flat_map(|t| t.split("->")).map(str::trim).collect();
    if tokens.len() < 2 || tokens.len() % 2 != 0 {
        return Err(bad("expected `start → (S<service> → <patient>)* → end`".into()));
    }
    let start = parse_endpoint(tokens[0]).ok_or_else(|| bad(format!("`{}` is not Depot or Lab", tokens[0])))?;
    let last = tokens[tokens.len() - 1];
    let end = parse_endpoint(last).ok_or_else(|| bad(format!("`{last}` is not Depot or Lab")))?;

    let mut visits = Vec::new();
    let mut loc = instance.node_of(start);
    let mut ready = 0.0;
    for pair in tokens[1..tokens.len() - 1].chunks(2) {
        let service: usize = pair[0]
            .strip_prefix('S')
            .and_then(|s| s.parse().ok())
            .filter(|&s| s >= 1 && s <= instance.num_services)
            .ok_or_else(|| bad(format!("`{}` is not a service label S1..S{}", pair[0], instance.num_services)))?;
        let patient: usize = pair[1]
            .parse()
            .ok()
            .filter(|&p| p >= 1 && p <= instance.num_patients)
            .ok_or_else(|| bad(format!("`{}` is not a patient 1..{}", pair[1], instance.num_patients)))?;
        let service = service - 1;
        let begin = (ready + instance.travel(loc, patient)).max(instance.window_lo[patient - 1]);
        visits.push(Visit {
            patient,
            service,
            start_time: begin,
        });
        ready = begin + instance.duration(patient, service);
        loc = patient;
    }
    Ok(Route {
        nurse,
        start,
        end,
        visits,
    })
}

/// One rendered route per nurse, in nurse order.
pub fn render_solution(solution: &Solution) -> Vec<String> {
    solution.routes.iter().map(render_route).collect()
}

/// Inverse of [`render_solution`].
pub fn parse_rendered(instance: &Instance, lines: &[String]) -> Result<Solution, ExperimentError> {
    let routes = lines
        .iter()
        .enumerate()
        .map(|(k, l)| parse_route(instance, k, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Solution::new(instance, routes)?)
}

fn nurse_list(nurses: impl IntoIterator<Item = usize>) -> String {
    nurses
        .into_iter()
        .map(|k| format!("Nurse{}", k + 1))
        .collect::<Vec<_>>()
        .join(", ")
}

fn nurses_where(solution: &Solution, pick: impl Fn(&Route) -> bool) -> Vec<usize> {
    solution.routes.iter().filter(|r| pick(r)).map(|r| r.nurse).collect()
}

/// Nurses starting at the depot, starting at the laboratory, ending at
/// the depot and ending at the laboratory.
pub fn endpoint_groups(solution: &Solution) -> [Vec<usize>; 4] {
    [
        nurses_where(solution, |r| r.start == Endpoint::Depot),
        nurses_where(solution, |r| r.start == Endpoint::Lab),
        nurses_where(solution, |r| r.end == Endpoint::Depot),
        nurses_where(solution, |r| r.end == Endpoint::Lab),
    ]
}

fn fmt_objective(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_default()
}

// ---------------------------------------------------------------------
// solution files

/// What `solve` writes and `validate` reads. Services are 0-based like
/// the instance arrays; patients are node indices 1..n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub instance: String,
    pub mode: Mode,
    pub solver: SolverKind,
    pub status: SolveStatus,
    pub objective: f64,
    pub routes: Vec<Route>,
}

impl SolutionFile {
    pub fn new(instance: &Instance, mode: Mode, solver: SolverKind, status: SolveStatus, solution: &Solution) -> Self {
        SolutionFile {
            instance: instance.name.clone(),
            mode,
            solver,
            status,
            objective: solution.objective,
            routes: solution.routes.clone(),
        }
    }

    /// The stored solution with the stored objective, not a recomputed one.
    pub fn solution(&self) -> Solution {
        Solution {
            routes: self.routes.clone(),
            objective: self.objective,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution files always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::SolutionFile(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One-row summary of a solve with the per-nurse endpoint columns.
pub fn summary_csv(
    instance: &Instance,
    result: &RunResult,
    omit_time: bool,
) -> Result<String, ExperimentError> {
    let mut header: Vec<String> = [
        "Instance",
        "Optimal function value",
        "Status",
        "Nurses with starting point at the depot",
        "Nurses with starting point at the laboratory",
        "Nurses with ending point at the depot",
        "Nurses with ending point at the laboratory",
    ]
    .map(String::from)
    .to_vec();
    let groups = result.solution.as_ref().map(endpoint_groups).unwrap_or_default();
    let mut row = vec![
        instance.name.clone(),
        fmt_objective(result.solution.as_ref().map(|s| s.objective)),
        result.status.to_string(),
    ];
    row.extend(groups.into_iter().map(nurse_list));
    if !omit_time {
        header.push("Computational time (seconds)".into());
        row.push(format!("{:.2}", result.wall_time));
    }
    csv_string(vec![header, row])
}

// ---------------------------------------------------------------------
// classic vs flexible

#[derive(Debug, Clone)]
pub struct ModeReport {
    pub mode: Mode,
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub instance: String,
    pub classic: ModeReport,
    pub flexible: ModeReport,
    /// Nurses whose set of patients differs between the modes.
    pub changed_patients: Vec<usize>,
    /// Nurses whose (start, end) pair differs between the modes.
    pub changed_endpoints: Vec<usize>,
}

pub fn compare(instance: &Instance, settings: &SolveSettings) -> Result<Comparison, SolveError> {
    let run = |mode| -> Result<ModeReport, SolveError> {
        let r = run_solver(instance, mode, settings)?;
        Ok(ModeReport {
            mode,
            status: r.status,
            solution: r.solution,
            wall_time: r.wall_time,
        })
    };
    let classic = run(Mode::Classic)?;
    let flexible = run(Mode::Flexible)?;
    let (mut changed_patients, mut changed_endpoints) = (Vec::new(), Vec::new());
    if let (Some(c), Some(f)) = (&classic.solution, &flexible.solution) {
        for (rc, rf) in c.routes.iter().zip(&f.routes) {
            let patients = |r: &Route| {
                let mut p: Vec<usize> = r.visits.iter().map(|v| v.patient).collect();
                p.sort_unstable();
                p.dedup();
                p
            };
            if patients(rc) != patients(rf) {
                changed_patients.push(rc.nurse);
            }
            if (rc.start, rc.end) != (rf.start, rf.end) {
                changed_endpoints.push(rc.nurse);
            }
        }
    }
    Ok(Comparison {
        instance: instance.name.clone(),
        classic,
        flexible,
        changed_patients,
        changed_endpoints,
    })
}

impl Comparison {
    pub fn render(&self, omit_time: bool) -> String {
        let mut out = format!("instance {}\n", self.instance);
        for rep in [&self.classic, &self.flexible] {
            let _ = write!(out, "{} objective {} ({})", rep.mode, fmt_objective(rep.solution.as_ref().map(|s| s.objective)), rep.status);
            if !omit_time {
                let _ = write!(out, " in {:.2}s", rep.wall_time);
            }
            out.push('\n');
            if let Some(sol) = &rep.solution {
                for (k, line) in render_solution(sol).iter().enumerate() {
                    let _ = writeln!(out, "  Nurse{}  {line}", k + 1);
                }
            }
        }
        let none_or = |v: &[usize]| if v.is_empty() { "none".to_string() } else { nurse_list(v.iter().copied()) };
        let _ = writeln!(out, "nurses serving different patients: {}", none_or(&self.changed_patients));
        let _ = writeln!(out, "nurses with different endpoints: {}", none_or(&self.changed_endpoints));
        out
    }

    /// One row per mode and nurse.
    pub fn to_csv(&self, omit_time: bool) -> Result<String, ExperimentError> {
        let mut header: Vec<String> = ["Mode", "Objective", "Status", "Nurse", "Start", "End", "Route"]
            .map(String::from)
            .to_vec();
        if !omit_time {
            header.push("Computational time (seconds)".into());
        }
        let mut rows = vec![header];
        for rep in [&self.classic, &self.flexible] {
            let objective = fmt_objective(rep.solution.as_ref().map(|s| s.objective));
            let mut push = |nurse: String, start: String, end: String, route: String| {
                let mut row = vec![rep.mode.to_string(), objective.clone(), rep.status.to_string(), nurse, start, end, route];
                if !omit_time {
                    row.push(format!("{:.2}", rep.wall_time));
                }
                rows.push(row);
            };
            match &rep.solution {
                Some(sol) => {
                    for r in &sol.routes {
                        push(format!("Nurse{}", r.nurse + 1), r.start.to_string(), r.end.to_string(), render_route(r));
                    }
                }
                None => push(String::new(), String::new(), String::new(), String::new()),
            }
        }
        csv_string(rows)
    }
}

// ---------------------------------------------------------------------
// endpoint requirement sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    None,
    StartLab,
    EndLab,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::None => "",
            Variant::StartLab => "Needs to start from lab",
            Variant::EndLab => "Needs to end at lab",
        }
    }

    /// `(start_req, end_req)` of the target service.
    pub fn flags(&self) -> (u8, u8) {
        match self {
            Variant::None => (0, 0),
            Variant::StartLab => (1, 0),
            Variant::EndLab => (0, 1),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::None => "none",
            Variant::StartLab => "start_lab",
            Variant::EndLab => "end_lab",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Variant::None),
            "start_lab" => Ok(Variant::StartLab),
            "end_lab" => Ok(Variant::EndLab),
            other => Err(format!("unknown variant `{other}`, expected none, start_lab or end_lab")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// 0-based.
    pub target_service: usize,
    pub variants: Vec<Variant>,
    pub settings: SolveSettings,
    /// Zero every other service's flags first, so only the target service
    /// can move an endpoint.
    pub clear_other_flags: bool,
    /// Nurse (0-based) whose route gets its own column.
    pub route_nurse: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// 1-based.
    pub experiment: usize,
    pub variant: Variant,
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub wall_time: f64,
    /// Nurses whose (start, end) differs from the `none` row; `None` when
    /// there is no solved `none` row to compare against.
    pub changed_vs_none: Option<Vec<usize>>,
}

impl SweepRow {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }
}

/// The instance with the target service's flags set for `variant`.
pub fn apply_variant(instance: &Instance, target: usize, variant: Variant, clear_other_flags: bool) -> Instance {
    let mut out = if clear_other_flags {
        instance.without_endpoint_requirements()
    } else {
        instance.clone()
    };
    let (s, e) = variant.flags();
    out.start_req[target] = s;
    out.end_req[target] = e;
    out
}

/// Solves every variant in flexible mode. Rows keep the order of
/// `spec.variants`; an unsolved variant gives a row without a solution.
pub fn sweep(instance: &Instance, spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    if spec.variants.is_empty() {
        return Err(ExperimentError::NoVariants);
    }
    if spec.target_service >= instance.num_services {
        return Err(ExperimentError::TargetOutOfRange {
            service: spec.target_service + 1,
            num_services: instance.num_services,
        });
    }
    let mut rows = Vec::with_capacity(spec.variants.len());
    for (i, &variant) in spec.variants.iter().enumerate() {
        let inst = apply_variant(instance, spec.target_service, variant, spec.clear_other_flags);
        let r = run_solver(&inst, Mode::Flexible, &spec.settings)?;
        rows.push(SweepRow {
            experiment: i + 1,
            variant,
            status: r.status,
            solution: r.solution,
            wall_time: r.wall_time,
            changed_vs_none: None,
        });
    }
    let base = rows
        .iter()
        .find(|r| r.variant == Variant::None)
        .and_then(|r| r.solution.clone());
    if let Some(base) = base {
        for row in &mut rows {
            if let Some(sol) = &row.solution {
                row.changed_vs_none = Some(
                    sol.routes
                        .iter()
                        .zip(&base.routes)
                        .filter(|(a, b)| (a.start, a.end) != (b.start, b.end))
                        .map(|(a, _)| a.nurse)
                        .collect(),
                );
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(instance: &Instance, spec: &SweepSpec, rows: &[SweepRow], omit_time: bool) -> Result<String, ExperimentError> {
    let mut header: Vec<String> = vec![
        "Experiment number".into(),
        "Number of patients".into(),
        format!("Feature of service #{}", spec.target_service + 1),
        "Optimal function value".into(),
        "Status".into(),
        "Nurses with starting point of depot".into(),
        "Nurses with starting point of laboratory".into(),
        "Nurses with ending point of depot".into(),
        "Nurses with ending point of laboratory".into(),
        "Nurses with changed endpoints".into(),
    ];
    if let Some(k) = spec.route_nurse {
        header.push(format!("Route of nurse #{}", k + 1));
    }
    if !omit_time {
        header.push("Computational time (second)".into());
    }
    let mut table = vec![header];
    for row in rows {
        let groups = row.solution.as_ref().map(endpoint_groups).unwrap_or_default();
        let mut line = vec![
            format!("#{}", row.experiment),
            instance.num_patients.to_string(),
            row.variant.label().to_string(),
            fmt_objective(row.objective()),
            row.status.to_string(),
        ];
        line.extend(groups.into_iter().map(nurse_list));
        line.push(row.changed_vs_none.clone().map(nurse_list).unwrap_or_default());
        if let Some(k) = spec.route_nurse {
            let route = row.solution.as_ref().and_then(|s| s.routes.get(k)).map(render_route);
            line.push(route.unwrap_or_default());
        }
        if !omit_time {
            line.push(format!("{:.2}", row.wall_time));
        }
        table.push(line);
    }
    csv_string(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::tiny_t1;
    use crate::validate::validate;

    fn exact() -> SolveSettings {
        SolveSettings::default()
    }

    #[test]
    fn render_and_parse_t1() {
        let t1 = tiny_t1();
        let sol = run_solver(&t1, Mode::Flexible, &exact()).unwrap().solution.unwrap();
        let lines = render_solution(&sol);
        assert_eq!(lines, vec!["Depot → S1 → 1 → S2 → 2 → Lab".to_string()]);
        let back = parse_rendered(&t1, &lines).unwrap();
        assert_eq!(back, sol);
        let ascii = parse_route(&t1, 0, "Depot -> S1 -> 1 -> S2 -> 2 -> Lab").unwrap();
        assert_eq!(ascii, sol.routes[0]);
    }

    #[test]
    fn idle_route_renders_depot_to_depot() {
        let t1 = tiny_t1();
        assert_eq!(render_route(&Route::idle(0)), "Depot → Depot");
        assert!(parse_route(&t1, 0, "Depot → Depot").unwrap().is_idle());
    }

    #[test]
    fn parse_rejects_garbage() {
        let t1 = tiny_t1();
        for bad in ["", "Depot", "Depot → S9 → 1 → Lab", "Depot → S1 → 7 → Lab", "Home → S1 → 1 → Lab", "Depot → S1 → Lab"] {
            assert!(matches!(parse_route(&t1, 0, bad), Err(ExperimentError::RouteParse { .. })), "{bad}");
        }
    }

    #[test]
    fn t1_comparison() {
        let cmp = compare(&tiny_t1(), &exact()).unwrap();
        assert_eq!(cmp.classic.solution.as_ref().unwrap().objective, 40.0);
        assert_eq!(cmp.flexible.solution.as_ref().unwrap().objective, 35.0);
        assert_eq!(cmp.changed_endpoints, vec![0]);
        assert!(cmp.changed_patients.is_empty());
        let text = cmp.render(true);
        assert!(text.contains("Nurse1  Depot → S1 → 1 → S2 → 2 → Lab"));
    }

    #[test]
    fn zeroed_flags_give_identical_modes() {
        let t1 = tiny_t1().without_endpoint_requirements();
        let cmp = compare(&t1, &exact()).unwrap();
        assert_eq!(cmp.classic.solution, cmp.flexible.solution);
        assert!(cmp.changed_endpoints.is_empty());
    }

    #[test]
    fn t1_sweep_on_second_service() {
        let t1 = tiny_t1();
        let spec = SweepSpec {
            target_service: 1,
            variants: vec![Variant::None, Variant::EndLab],
            settings: exact(),
            clear_other_flags: false,
            route_nurse: Some(0),
        };
        let rows = sweep(&t1, &spec).unwrap();
        let objs: Vec<f64> = rows.iter().map(|r| r.objective().unwrap()).collect();
        assert_eq!(objs, vec![40.0, 35.0]);
        assert_eq!(rows[1].changed_vs_none, Some(vec![0]));
        let csv = sweep_csv(&t1, &spec, &rows, true).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("Experiment number,Number of patients,Feature of service #2"));
        assert_eq!(lines.next().unwrap(), "#1,2,,40.000,optimal,Nurse1,,Nurse1,,,Depot → S1 → 1 → S2 → 2 → Depot");
    }

    #[test]
    fn sweep_rejects_bad_spec() {
        let t1 = tiny_t1();
        let mut spec = SweepSpec {
            target_service: 5,
            variants: vec![Variant::None],
            settings: exact(),
            clear_other_flags: false,
            route_nurse: None,
        };
        assert!(matches!(sweep(&t1, &spec), Err(ExperimentError::TargetOutOfRange { service: 6, .. })));
        spec.target_service = 0;
        spec.variants.clear();
        assert!(matches!(sweep(&t1, &spec), Err(ExperimentError::NoVariants)));
    }

    #[test]
    fn solution_file_round_trip() {
        let t1 = tiny_t1();
        let sol = run_solver(&t1, Mode::Flexible, &exact()).unwrap().solution.unwrap();
        let file = SolutionFile::new(&t1, Mode::Flexible, SolverKind::Exact, SolveStatus::Optimal, &sol);
        let back = SolutionFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert!(validate(&t1, &back.solution(), back.mode).ok);
    }

    #[test]
    fn summary_lists_endpoint_groups() {
        let t1 = tiny_t1();
        let r = run_solver(&t1, Mode::Flexible, &exact()).unwrap();
        let csv = summary_csv(&t1, &r, true).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "T1,35.000,optimal,Nurse1,,,Nurse1");
    }
}
