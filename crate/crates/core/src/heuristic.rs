//! Greedy insertion followed by best-improvement local search.
//!
//! Every move is evaluated on whole routes: endpoints are recomputed from
//! the route's new service set and windows are re-propagated, so moving a
//! task that needs the laboratory changes the cost of both routes'
//! endpoint legs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::exact::improves;
use crate::model::{build_route, Instance, Mode, Solution, Task, TaskTable, TIME_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhoods {
    pub relocate: bool,
    pub swap: bool,
    /// Segment reversal within a route and tail exchange between routes.
    pub two_opt: bool,
}

impl Neighborhoods {
    pub fn all() -> Self {
        Neighborhoods {
            relocate: true,
            swap: true,
            two_opt: true,
        }
    }

    pub fn any(&self) -> bool {
        self.relocate || self.swap || self.two_opt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub seed: u64,
    /// Maximum number of accepted moves per local search run.
    pub iteration_budget: usize,
    pub neighborhoods: Neighborhoods,
    /// Number of greedy + local search runs; run `r` perturbs the greedy
    /// order with seed `seed + r`; seed 0 is the unperturbed order.
    pub restarts: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            seed: 0,
            iteration_budget: 10_000,
            neighborhoods: Neighborhoods::all(),
            restarts: 32,
        }
    }
}

struct Ctx<'a> {
    inst: &'a Instance,
    mode: Mode,
    strict: bool,
    table: TaskTable,
}

impl Ctx<'_> {
    fn tasks(&self) -> &[Task] {
        &self.table.tasks
    }

    fn qualified(&self, k: usize, t: usize) -> bool {
        self.inst.is_qualified(k, self.tasks()[t].service)
    }

    /// Travel time of visiting `seq` with mode-implied endpoints, or
    /// `None` if a window is missed.
    fn route_cost(&self, seq: &[usize]) -> Option<f64> {
        if seq.is_empty() {
            return Some(0.0);
        }
        let inst = self.inst;
        let tasks = self.tasks();
        let flexible = self.mode == Mode::Flexible;
        let lab_start = flexible && seq.iter().any(|&t| inst.requires_lab_start(tasks[t].service));
        let lab_end = flexible && seq.iter().any(|&t| inst.requires_lab_end(tasks[t].service));
        let mut loc = if lab_start { inst.lab() } else { inst.depot() };
        let mut ready = 0.0;
        let mut cost = 0.0;
        for &t in seq {
            let task = &tasks[t];
            let leg = inst.travel(loc, task.patient);
            let begin = (ready + leg).max(task.window.0);
            if begin > task.window.1 + TIME_TOL {
                return None;
            }
            cost += leg;
            ready = begin + task.duration;
            loc = task.patient;
        }
        Some(cost + inst.travel(loc, if lab_end { inst.lab() } else { inst.depot() }))
    }

    fn to_solution(&self, seqs: &[Vec<usize>]) -> Solution {
        let routes = seqs
            .iter()
            .enumerate()
            .map(|(k, seq)| {
                let chosen: Vec<Task> = seq.iter().map(|&t| self.tasks()[t]).collect();
                build_route(self.inst, self.mode, k, &chosen).expect("plan routes are feasible")
            })
            .collect();
        Solution::new(self.inst, routes).expect("plan routes are in range")
    }
}

struct Plan {
    seqs: Vec<Vec<usize>>,
    costs: Vec<f64>,
}

impl Plan {
    fn total(&self) -> f64 {
        self.costs.iter().sum()
    }
}

pub fn construct_greedy(instance: &Instance, mode: Mode, seed: u64) -> Result<Solution, SolveError> {
    construct_greedy_with(instance, mode, false, seed)
}

pub fn construct_greedy_with(
    instance: &Instance,
    mode: Mode,
    strict: bool,
    seed: u64,
) -> Result<Solution, SolveError> {
    instance.validate()?;
    let ctx = Ctx {
        inst: instance,
        mode,
        strict,
        table: TaskTable::new(instance),
    };
    let plan = greedy(&ctx, seed)?;
    Ok(ctx.to_solution(&plan.seqs))
}

/// Inserts tasks most-constrained first (fewest qualified nurses, then
/// earliest window close) at their cheapest feasible position.
fn greedy(ctx: &Ctx, seed: u64) -> Result<Plan, SolveError> {
    let inst = ctx.inst;
    let v = inst.num_nurses;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter_scale = if seed == 0 { 0.0 } else { inst.window_hi.iter().copied().fold(0.0, f64::max) };
    let mut order: Vec<(usize, f64, usize)> = ctx
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let qualified = (0..v).filter(|&k| ctx.qualified(k, t)).count();
            let jitter: f64 = if jitter_scale > 0.0 {
                rng.gen_range(0.0..jitter_scale)
            } else {
                0.0
            };
            (qualified, task.window.1 + jitter, t)
        })
        .collect();
    order.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut plan = Plan {
        seqs: vec![Vec::new(); v],
        costs: vec![0.0; v],
    };
    for &(_, _, t) in &order {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for k in 0..v {
            if !ctx.qualified(k, t) {
                continue;
            }
            for pos in 0..=plan.seqs[k].len() {
                let mut trial = plan.seqs[k].clone();
                trial.insert(pos, t);
                if let Some(cost) = ctx.route_cost(&trial) {
                    let delta = cost - plan.costs[k];
                    if best.is_none_or(|b| delta < b.0 - 1e-12) {
                        best = Some((delta, k, pos, cost));
                    }
                }
            }
        }
        let Some((_, k, pos, cost)) = best else {
            let task = &ctx.tasks()[t];
            return Err(SolveError::ConstructionFailed {
                patient: task.patient,
                service: task.service + 1,
            });
        };
        plan.seqs[k].insert(pos, t);
        plan.costs[k] = cost;
    }
    if ctx.strict {
        fill_idle(ctx, &mut plan)?;
    }
    Ok(plan)
}

/// Gives every idle nurse one task, taken from a route that keeps at
/// least one visit, at least added cost.
fn fill_idle(ctx: &Ctx, plan: &mut Plan) -> Result<(), SolveError> {
    let v = plan.seqs.len();
    for target in 0..v {
        if !plan.seqs[target].is_empty() {
            continue;
        }
        let mut best: Option<(f64, usize, usize, f64, f64)> = None;
        for donor in 0..v {
            if donor == target || plan.seqs[donor].len() < 2 {
                continue;
            }
            for i in 0..plan.seqs[donor].len() {
                let t = plan.seqs[donor][i];
                if !ctx.qualified(target, t) {
                    continue;
                }
                let mut rest = plan.seqs[donor].clone();
                rest.remove(i);
                let (Some(donor_cost), Some(target_cost)) = (ctx.route_cost(&rest), ctx.route_cost(&[t])) else {
                    continue;
                };
                let delta = donor_cost + target_cost - plan.costs[donor];
                if best.is_none_or(|b| delta < b.0 - 1e-12) {
                    best = Some((delta, donor, i, donor_cost, target_cost));
                }
            }
        }
        let Some((_, donor, i, donor_cost, target_cost)) = best else {
            return Err(SolveError::IdleNurse { nurse: target + 1 });
        };
        let t = plan.seqs[donor].remove(i);
        plan.seqs[target].push(t);
        plan.costs[donor] = donor_cost;
        plan.costs[target] = target_cost;
    }
    Ok(())
}

/// Longest run of consecutive visits a relocate move carries, so a
/// patient's tasks can move together.
const MAX_SEGMENT: usize = 3;

enum Move {
    /// Moves `len` consecutive visits; `j` indexes the target route with
    /// the segment already removed.
    Relocate { from: usize, i: usize, len: usize, to: usize, j: usize },
    Swap { a: usize, i: usize, b: usize, j: usize },
    TwoOpt { route: usize, i: usize, j: usize },
    /// Exchanges the tails of two routes after positions `i` and `j`.
    TailExchange { a: usize, i: usize, b: usize, j: usize },
}

/// Best-improvement local search. The result never costs more than
/// `start`, and `start` must already be valid.
pub fn improve_local_search(
    instance: &Instance,
    mode: Mode,
    start: &Solution,
    config: &HeuristicConfig,
) -> Solution {
    improve_with(instance, mode, false, start, config)
}

pub fn improve_with(
    instance: &Instance,
    mode: Mode,
    strict: bool,
    start: &Solution,
    config: &HeuristicConfig,
) -> Solution {
    let ctx = Ctx {
        inst: instance,
        mode,
        strict,
        table: TaskTable::new(instance),
    };
    let seqs: Vec<Vec<usize>> = start.order_key(&ctx.table);
    let costs: Option<Vec<f64>> = seqs.iter().map(|s| ctx.route_cost(s)).collect();
    let Some(costs) = costs else {
        return start.clone();
    };
    let mut plan = Plan { seqs, costs };
    local_search(&ctx, &mut plan, config);
    let improved = ctx.to_solution(&plan.seqs);
    if improved.objective <= start.objective + 1e-9 {
        improved
    } else {
        start.clone()
    }
}

fn local_search(ctx: &Ctx, plan: &mut Plan, config: &HeuristicConfig) {
    let nb = config.neighborhoods;
    for _ in 0..config.iteration_budget {
        let mut best: Option<(f64, Move, f64, f64)> = None;
        let mut consider = |delta: f64, mv: Move, ca: f64, cb: f64| {
            if delta < -1e-9 && best.as_ref().is_none_or(|b| delta < b.0 - 1e-12) {
                best = Some((delta, mv, ca, cb));
            }
        };
        let v = plan.seqs.len();

        if nb.relocate {
            for from in 0..v {
                for len in 1..=MAX_SEGMENT.min(plan.seqs[from].len()) {
                    for i in 0..=plan.seqs[from].len() - len {
                        let segment: Vec<usize> = plan.seqs[from][i..i + len].to_vec();
                        let mut without = plan.seqs[from].clone();
                        without.drain(i..i + len);
                        if ctx.strict && without.is_empty() {
                            continue;
                        }
                        let Some(from_cost) = ctx.route_cost(&without) else {
                            continue;
                        };
                        for to in 0..v {
                            if segment.iter().any(|&t| !ctx.qualified(to, t)) {
                                continue;
                            }
                            let base = if to == from { &without } else { &plan.seqs[to] };
                            for j in 0..=base.len() {
                                if to == from && j == i {
                                    continue;
                                }
                                let mut trial = base.clone();
                                trial.splice(j..j, segment.iter().copied());
                                let Some(to_cost) = ctx.route_cost(&trial) else {
                                    continue;
                                };
                                let delta = if to == from {
                                    to_cost - plan.costs[from]
                                } else {
                                    from_cost + to_cost - plan.costs[from] - plan.costs[to]
                                };
                                consider(delta, Move::Relocate { from, i, len, to, j }, from_cost, to_cost);
                            }
                        }
                    }
                }
            }
        }

        if nb.swap {
            for a in 0..v {
                for i in 0..plan.seqs[a].len() {
                    for b in a..v {
                        let j0 = if a == b { i + 1 } else { 0 };
                        for j in j0..plan.seqs[b].len() {
                            let (ta, tb) = (plan.seqs[a][i], plan.seqs[b][j]);
                            if a == b {
                                let mut trial = plan.seqs[a].clone();
                                trial.swap(i, j);
                                if let Some(c) = ctx.route_cost(&trial) {
                                    consider(c - plan.costs[a], Move::Swap { a, i, b, j }, c, c);
                                }
                                continue;
                            }
                            if !ctx.qualified(a, tb) || !ctx.qualified(b, ta) {
                                continue;
                            }
                            let mut ra = plan.seqs[a].clone();
                            ra[i] = tb;
                            let mut rb = plan.seqs[b].clone();
                            rb[j] = ta;
                            if let (Some(ca), Some(cb)) = (ctx.route_cost(&ra), ctx.route_cost(&rb)) {
                                let delta = ca + cb - plan.costs[a] - plan.costs[b];
                                consider(delta, Move::Swap { a, i, b, j }, ca, cb);
                            }
                        }
                    }
                }
            }
        }

        if nb.two_opt {
            for route in 0..v {
                let len = plan.seqs[route].len();
                for i in 0..len {
                    for j in i + 1..len {
                        let mut trial = plan.seqs[route].clone();
                        trial[i..=j].reverse();
                        if let Some(c) = ctx.route_cost(&trial) {
                            consider(c - plan.costs[route], Move::TwoOpt { route, i, j }, c, c);
                        }
                    }
                }
            }
        }

        if nb.two_opt {
            for a in 0..v {
                for b in a + 1..v {
                    for i in 0..=plan.seqs[a].len() {
                        for j in 0..=plan.seqs[b].len() {
                            let (head_a, tail_a) = plan.seqs[a].split_at(i);
                            let (head_b, tail_b) = plan.seqs[b].split_at(j);
                            if tail_a.is_empty() && tail_b.is_empty() {
                                continue;
                            }
                            if tail_b.iter().any(|&t| !ctx.qualified(a, t))
                                || tail_a.iter().any(|&t| !ctx.qualified(b, t))
                            {
                                continue;
                            }
                            let ra: Vec<usize> = head_a.iter().chain(tail_b).copied().collect();
                            let rb: Vec<usize> = head_b.iter().chain(tail_a).copied().collect();
                            if ctx.strict && (ra.is_empty() || rb.is_empty()) {
                                continue;
                            }
                            if let (Some(ca), Some(cb)) = (ctx.route_cost(&ra), ctx.route_cost(&rb)) {
                                let delta = ca + cb - plan.costs[a] - plan.costs[b];
                                consider(delta, Move::TailExchange { a, i, b, j }, ca, cb);
                            }
                        }
                    }
                }
            }
        }

        let Some((_, mv, ca, cb)) = best else {
            return;
        };
        match mv {
            Move::Relocate { from, i, len, to, j } => {
                let segment: Vec<usize> = plan.seqs[from].drain(i..i + len).collect();
                plan.seqs[to].splice(j..j, segment);
                plan.costs[from] = ca;
                plan.costs[to] = cb;
                if from == to {
                    plan.costs[from] = cb;
                }
            }
            Move::Swap { a, i, b, j } => {
                if a == b {
                    plan.seqs[a].swap(i, j);
                    plan.costs[a] = ca;
                } else {
                    let ta = plan.seqs[a][i];
                    plan.seqs[a][i] = plan.seqs[b][j];
                    plan.seqs[b][j] = ta;
                    plan.costs[a] = ca;
                    plan.costs[b] = cb;
                }
            }
            Move::TwoOpt { route, i, j } => {
                plan.seqs[route][i..=j].reverse();
                plan.costs[route] = ca;
            }
            Move::TailExchange { a, i, b, j } => {
                let tail_a = plan.seqs[a].split_off(i);
                let tail_b = plan.seqs[b].split_off(j);
                plan.seqs[a].extend(tail_b);
                plan.seqs[b].extend(tail_a);
                plan.costs[a] = ca;
                plan.costs[b] = cb;
            }
        }
        debug_assert!(
            crate::validate::validate(ctx.inst, &ctx.to_solution(&plan.seqs), ctx.mode).ok,
            "local search produced an invalid solution"
        );
    }
}

/// Runs greedy + local search from `config.restarts` perturbed greedy
/// orders and keeps the best result (ties to the lexicographically
/// smallest visit order).
pub fn solve(
    instance: &Instance,
    mode: Mode,
    strict: bool,
    config: &HeuristicConfig,
) -> Result<Solution, SolveError> {
    instance.validate()?;
    let ctx = Ctx {
        inst: instance,
        mode,
        strict,
        table: TaskTable::new(instance),
    };
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut first_error = None;
    for r in 0..config.restarts.max(1) {
        let seed = config.seed.wrapping_add(r as u64);
        match greedy(&ctx, seed) {
            Ok(mut plan) => {
                if config.neighborhoods.any() {
                    local_search(&ctx, &mut plan, config);
                }
                let total = plan.total();
                if improves(total, &plan.seqs, best.as_ref().map(|(c, k)| (*c, k.as_slice()))) {
                    best = Some((total, plan.seqs));
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match best {
        Some((_, seqs)) => Ok(ctx.to_solution(&seqs)),
        None => Err(first_error.expect("at least one restart ran")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_bruteforce;
    use crate::instances::tiny_t1;
    use crate::model::{Endpoint, Route, Visit};
    use crate::validate::validate;

    #[test]
    fn greedy_on_t1_is_valid() {
        let t1 = tiny_t1();
        let sol = construct_greedy(&t1, Mode::Flexible, 0).unwrap();
        assert!(validate(&t1, &sol, Mode::Flexible).ok);
        assert!(sol.objective <= 40.0);
    }

    #[test]
    fn greedy_zero_demand_is_idle() {
        let mut t1 = tiny_t1();
        t1.demand = vec![vec![0, 0], vec![0, 0]];
        let sol = construct_greedy(&t1, Mode::Flexible, 0).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.routes.iter().all(Route::is_idle));
    }

    #[test]
    fn sole_qualified_nurse_takes_all_its_tasks() {
        let mut t1 = tiny_t1();
        t1.num_nurses = 2;
        t1.qualification = vec![vec![1, 0], vec![1, 1]];
        let sol = construct_greedy(&t1, Mode::Flexible, 0).unwrap();
        assert!(sol.routes[1].visits.iter().any(|v| v.service == 1));
        assert!(sol.routes[0].visits.iter().all(|v| v.service != 1));
    }

    #[test]
    fn optimum_is_local_optimum() {
        let t1 = tiny_t1();
        let opt = solve_bruteforce(&t1, Mode::Flexible).unwrap().solution.unwrap();
        let out = improve_local_search(&t1, Mode::Flexible, &opt, &HeuristicConfig::default());
        assert_eq!(out, opt);
    }

    #[test]
    fn relocate_repairs_reversed_t1_route() {
        let t1 = tiny_t1();
        // D -> P2 -> P1 -> L costs 20 + 10 + 25 = 55
        let start = Solution::new(
            &t1,
            vec![Route {
                nurse: 0,
                start: Endpoint::Depot,
                end: Endpoint::Lab,
                visits: vec![
                    Visit { patient: 2, service: 1, start_time: 20.0 },
                    Visit { patient: 1, service: 0, start_time: 35.0 },
                ],
            }],
        )
        .unwrap();
        assert_eq!(start.objective, 55.0);
        let cfg = HeuristicConfig {
            neighborhoods: Neighborhoods {
                relocate: true,
                swap: false,
                two_opt: false,
            },
            ..HeuristicConfig::default()
        };
        let out = improve_local_search(&t1, Mode::Flexible, &start, &cfg);
        assert_eq!(out.objective, 35.0);
    }

    #[test]
    fn classic_start_improves_to_flexible_optimum() {
        let t1 = tiny_t1();
        let classic = solve_bruteforce(&t1, Mode::Classic).unwrap().solution.unwrap();
        // same visit order re-evaluated under flexible endpoints
        let mut start = classic.clone();
        start.routes[0].end = Endpoint::Lab;
        start.objective = crate::model::objective(&t1, &start).unwrap();
        let out = improve_local_search(&t1, Mode::Flexible, &start, &HeuristicConfig::default());
        assert_eq!(out.objective, 35.0);
    }

    #[test]
    fn seed_determinism() {
        let inst = crate::instances::generate(&crate::instances::GenConfig::new(8, 2, 4, 9)).unwrap();
        let cfg = HeuristicConfig {
            seed: 17,
            ..HeuristicConfig::default()
        };
        let a = solve(&inst, Mode::Flexible, false, &cfg);
        let b = solve(&inst, Mode::Flexible, false, &cfg);
        assert_eq!(a.ok(), b.ok());
    }
}
