//! Targeted corruptions of valid solutions, each paired with the
//! validator tags it must and may raise.

use flexroute::{Endpoint, Instance, Route, Solution, Tag};

fn flip(e: Endpoint) -> Endpoint {
    match e {
        Endpoint::Depot => Endpoint::Lab,
        Endpoint::Lab => Endpoint::Depot,
    }
}

pub fn busy_routes(sol: &Solution) -> Vec<usize> {
    (0..sol.routes.len()).filter(|&k| !sol.routes[k].is_idle()).collect()
}

#[derive(Debug, Clone, Copy)]
pub enum Mutation {
    Early,
    Late,
    SwapNurses,
    Drop,
    Duplicate,
    FlipStart,
    FlipEnd,
    Objective,
    UnknownNurse,
}

pub const MUTATIONS: [Mutation; 9] = [
    Mutation::Early,
    Mutation::Late,
    Mutation::SwapNurses,
    Mutation::Drop,
    Mutation::Duplicate,
    Mutation::FlipStart,
    Mutation::FlipEnd,
    Mutation::Objective,
    Mutation::UnknownNurse,
];

/// Applies `m` and returns the mutated solution with the tags it must
/// raise and the tags it may raise besides. `None` when the mutation does
/// not apply.
pub fn mutate(inst: &Instance, base: &Solution, m: Mutation, a: usize, b: usize) -> Option<(Solution, Vec<Tag>, Vec<Tag>)> {
    let busy = busy_routes(base);
    let k = busy[a % busy.len()];
    let mut sol = base.clone();
    let len = sol.routes[k].visits.len();
    let i = b % len;
    let rescore = |s: Solution| Solution::new(inst, s.routes).unwrap();
    match m {
        Mutation::Early => {
            let lo = inst.window(sol.routes[k].visits[i].patient).0;
            sol.routes[k].visits[i].start_time = lo - 1.0 - (b % 7) as f64;
            Some((sol, vec![Tag::Window], vec![Tag::Timing]))
        }
        Mutation::Late => {
            let hi = inst.window(sol.routes[k].visits[i].patient).1;
            sol.routes[k].visits[i].start_time = hi + 1.0 + (a % 7) as f64;
            Some((sol, vec![Tag::Window], vec![Tag::Timing]))
        }
        Mutation::SwapNurses => {
            if inst.num_nurses < 2 {
                return None;
            }
            let other = (k + 1 + a % (inst.num_nurses - 1)) % inst.num_nurses;
            let (x, y) = (sol.routes[k].clone(), sol.routes[other].clone());
            sol.routes[k] = Route { nurse: k, ..y };
            sol.routes[other] = Route { nurse: other, ..x };
            let unqualified = sol
                .routes
                .iter()
                .any(|r| r.visits.iter().any(|v| !inst.is_qualified(r.nurse, v.service)));
            let must = if unqualified { vec![Tag::Qualification] } else { vec![] };
            Some((sol, must, vec![]))
        }
        Mutation::Drop => {
            sol.routes[k].visits.remove(i);
            Some((
                rescore(sol),
                vec![Tag::Coverage],
                vec![Tag::StartEndpoint, Tag::EndEndpoint, Tag::Timing],
            ))
        }
        Mutation::Duplicate => {
            let v = sol.routes[k].visits[i].clone();
            sol.routes[k].visits.insert(i + 1, v);
            Some((rescore(sol), vec![Tag::Coverage], vec![Tag::Timing]))
        }
        Mutation::FlipStart => {
            sol.routes[k].start = flip(sol.routes[k].start);
            Some((rescore(sol), vec![Tag::StartEndpoint], vec![Tag::Timing]))
        }
        Mutation::FlipEnd => {
            sol.routes[k].end = flip(sol.routes[k].end);
            Some((rescore(sol), vec![Tag::EndEndpoint], vec![]))
        }
        Mutation::Objective => {
            sol.objective += 0.5 + a as f64;
            Some((sol, vec![Tag::Objective], vec![]))
        }
        Mutation::UnknownNurse => {
            sol.routes[k].nurse = inst.num_nurses + a % 3;
            Some((sol, vec![Tag::Partition], vec![Tag::Coverage]))
        }
    }
}
