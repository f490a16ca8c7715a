//! Exhaustive enumeration. Serves as the reference the other solvers are
//! checked against, so it deliberately shares no search code with them.

use std::collections::HashMap;
use std::time::Instant;

use super::{improves, SolveOutcome, SolveStatus};
use crate::error::SolveError;
use crate::model::{expand_tasks, Endpoint, Instance, Mode, Route, Solution, Task, Visit, TIME_TOL};

pub const MAX_BRUTEFORCE_TASKS: usize = 8;
pub const MAX_BRUTEFORCE_NURSES: usize = 3;

pub fn solve_bruteforce(instance: &Instance, mode: Mode) -> Result<SolveOutcome, SolveError> {
    solve_bruteforce_with(instance, mode, false)
}

#[derive(Clone)]
struct BestRoute {
    cost: f64,
    order: Vec<usize>,
    start: Endpoint,
    end: Endpoint,
    times: Vec<f64>,
}

/// Exhaustive search over task-to-nurse assignments, visit orders and
/// both endpoint choices per route. With `strict`, idle nurses are not
/// allowed.
pub fn solve_bruteforce_with(
    instance: &Instance,
    mode: Mode,
    strict: bool,
) -> Result<SolveOutcome, SolveError> {
    instance.validate()?;
    let clock = Instant::now();
    let tasks = expand_tasks(instance);
    let v = instance.num_nurses;
    if tasks.len() > MAX_BRUTEFORCE_TASKS || v > MAX_BRUTEFORCE_NURSES {
        return Err(SolveError::TooLarge {
            tasks: tasks.len(),
            nurses: v,
        });
    }

    let mut cache: HashMap<(usize, u32), Option<BestRoute>> = HashMap::new();
    let mut best: Option<(f64, Vec<Vec<usize>>, Vec<BestRoute>)> = None;
    let mut owner = vec![0usize; tasks.len()];
    let mut evaluated = 0u64;

    loop {
        let feasible_assignment = owner
            .iter()
            .enumerate()
            .all(|(t, &k)| instance.is_qualified(k, tasks[t].service));
        if feasible_assignment {
            evaluated += 1;
            let mut routes = Vec::with_capacity(v);
            let mut total = 0.0;
            let mut ok = true;
            for k in 0..v {
                let mask = owner
                    .iter()
                    .enumerate()
                    .filter(|&(_, &o)| o == k)
                    .fold(0u32, |m, (t, _)| m | (1 << t));
                let entry = cache
                    .entry((k, mask))
                    .or_insert_with(|| best_route(instance, mode, strict, &tasks, mask))
                    .clone();
                match entry {
                    Some(r) => {
                        total += r.cost;
                        routes.push(r);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let key: Vec<Vec<usize>> = routes.iter().map(|r| r.order.clone()).collect();
                if improves(total, &key, best.as_ref().map(|(c, k, _)| (*c, k.as_slice()))) {
                    best = Some((total, key, routes));
                }
            }
        }
        // next assignment, odometer style
        let mut t = 0;
        loop {
            if t == owner.len() {
                return Ok(finish(instance, &tasks, best, evaluated, clock));
            }
            owner[t] += 1;
            if owner[t] < v {
                break;
            }
            owner[t] = 0;
            t += 1;
        }
    }
}

fn finish(
    instance: &Instance,
    tasks: &[Task],
    best: Option<(f64, Vec<Vec<usize>>, Vec<BestRoute>)>,
    evaluated: u64,
    clock: Instant,
) -> SolveOutcome {
    let wall_time = clock.elapsed().as_secs_f64();
    match best {
        None => SolveOutcome {
            status: SolveStatus::Infeasible,
            solution: None,
            bound: f64::INFINITY,
            nodes_explored: evaluated,
            wall_time,
            incumbent_trace: Vec::new(),
        },
        Some((_, _, routes)) => {
            let routes: Vec<Route> = routes
                .into_iter()
                .enumerate()
                .map(|(k, r)| Route {
                    nurse: k,
                    start: r.start,
                    end: r.end,
                    visits: r
                        .order
                        .iter()
                        .zip(&r.times)
                        .map(|(&t, &start_time)| Visit {
                            patient: tasks[t].patient,
                            service: tasks[t].service,
                            start_time,
                        })
                        .collect(),
                })
                .collect();
            let solution = Solution::new(instance, routes).expect("oracle routes are in range");
            SolveOutcome {
                status: SolveStatus::Optimal,
                bound: solution.objective,
                incumbent_trace: vec![solution.objective],
                solution: Some(solution),
                nodes_explored: evaluated,
                wall_time,
            }
        }
    }
}

/// Cheapest feasible route through exactly the tasks in `mask`; the first
/// minimum in lexicographic permutation order wins ties.
fn best_route(
    instance: &Instance,
    mode: Mode,
    strict: bool,
    tasks: &[Task],
    mask: u32,
) -> Option<BestRoute> {
    let mut order: Vec<usize> = (0..tasks.len()).filter(|&t| mask & (1 << t) != 0).collect();
    if order.is_empty() {
        if strict {
            return None;
        }
        return Some(BestRoute {
            cost: 0.0,
            order,
            start: Endpoint::Depot,
            end: Endpoint::Depot,
            times: Vec::new(),
        });
    }
    let needs_lab_start = order.iter().any(|&t| instance.start_req[tasks[t].service] == 1);
    let needs_lab_end = order.iter().any(|&t| instance.end_req[tasks[t].service] == 1);
    let endpoint_options: &[(Endpoint, Endpoint)] = match mode {
        Mode::Classic => &[(Endpoint::Depot, Endpoint::Depot)],
        Mode::Flexible => &[
            (Endpoint::Depot, Endpoint::Depot),
            (Endpoint::Depot, Endpoint::Lab),
            (Endpoint::Lab, Endpoint::Depot),
            (Endpoint::Lab, Endpoint::Lab),
        ],
    };

    let mut best: Option<BestRoute> = None;
    loop {
        for &(start, end) in endpoint_options {
            if mode == Mode::Flexible
                && ((start == Endpoint::Lab) != needs_lab_start || (end == Endpoint::Lab) != needs_lab_end)
            {
                continue;
            }
            let mut loc = instance.node_of(start);
            let mut clock = 0.0;
            let mut cost = 0.0;
            let mut times = Vec::with_capacity(order.len());
            let mut feasible = true;
            for &t in &order {
                let task = &tasks[t];
                let travel = instance.travel_time[loc][task.patient];
                cost += travel;
                let begin = (clock + travel).max(task.window.0);
                if begin > task.window.1 + TIME_TOL {
                    feasible = false;
                    break;
                }
                times.push(begin);
                clock = begin + task.duration;
                loc = task.patient;
            }
            if !feasible {
                continue;
            }
            cost += instance.travel_time[loc][instance.node_of(end)];
            if best.as_ref().is_none_or(|b| cost < b.cost - crate::model::OBJ_TOL) {
                best = Some(BestRoute {
                    cost,
                    order: order.clone(),
                    start,
                    end,
                    times,
                });
            }
        }
        if !next_permutation(&mut order) {
            return best;
        }
    }
}

fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}
