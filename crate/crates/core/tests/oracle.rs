mod common;

use flexroute::exact::{root_lower_bound, solve_bnb_with, solve_bruteforce, solve_bruteforce_with, BnbOptions};
use flexroute::heuristic::{self, HeuristicConfig};
use flexroute::model::endpoint_requirements;
use flexroute::validate::validate_strict;
use flexroute::{validate, Instance, Mode, SolveOutcome, SolveStatus};

const MODES: [Mode; 2] = [Mode::Flexible, Mode::Classic];

fn same_optimum(inst: &Instance, a: &SolveOutcome, b: &SolveOutcome) {
    assert_eq!(a.status, b.status, "{}", inst.name);
    match (a.objective(), b.objective()) {
        (Some(x), Some(y)) => {
            if inst.name.ends_with("-int") {
                assert_eq!(x, y, "{}", inst.name);
            } else {
                assert!((x - y).abs() <= 1e-9, "{}: {x} vs {y}", inst.name);
            }
        }
        (None, None) => {}
        other => panic!("{}: {other:?}", inst.name),
    }
}

#[test]
fn branch_and_bound_matches_the_oracle() {
    let mut solved = 0;
    for inst in common::oracle_set() {
        for mode in MODES {
            let oracle = solve_bruteforce(&inst, mode).unwrap();
            let bnb = solve_bnb_with(&inst, mode, &BnbOptions::default());
            same_optimum(&inst, &bnb, &oracle);
            // same tie-break, so the very same routes
            assert_eq!(bnb.solution, oracle.solution, "{} {mode}", inst.name);
            if let Some(sol) = &bnb.solution {
                assert!(validate(&inst, sol, mode).ok);
                solved += 1;
            }
        }
    }
    assert!(solved >= 60, "only {solved} of 100 runs were feasible");
}

#[test]
fn pruning_switches_do_not_change_the_optimum() {
    for inst in common::oracle_set() {
        for mode in MODES {
            let reference = solve_bnb_with(&inst, mode, &BnbOptions::default());
            for opts in [
                BnbOptions {
                    endpoint_pruning: false,
                    ..BnbOptions::default()
                },
                BnbOptions {
                    dominance: false,
                    ..BnbOptions::default()
                },
                BnbOptions {
                    warm_start: false,
                    ..BnbOptions::default()
                },
            ] {
                let other = solve_bnb_with(&inst, mode, &opts);
                same_optimum(&inst, &other, &reference);
                assert_eq!(other.solution, reference.solution, "{} {mode} {opts:?}", inst.name);
            }
        }
    }
}

#[test]
fn bounds_are_sound() {
    for inst in common::oracle_set() {
        for mode in MODES {
            let oracle = solve_bruteforce(&inst, mode).unwrap();
            let Some(opt) = oracle.objective() else {
                continue;
            };
            let root = root_lower_bound(&inst, mode);
            assert!(root <= opt + 1e-9, "{} {mode}: root {root} > {opt}", inst.name);
            let out = solve_bnb_with(&inst, mode, &BnbOptions::default());
            assert!((out.bound - opt).abs() <= 1e-6);
        }
    }
}

#[test]
fn incumbent_trace_only_improves() {
    for inst in common::oracle_set() {
        for mode in MODES {
            let out = solve_bnb_with(
                &inst,
                mode,
                &BnbOptions {
                    warm_start: false,
                    ..BnbOptions::default()
                },
            );
            for pair in out.incumbent_trace.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
            if let (Some(last), Some(obj)) = (out.incumbent_trace.last(), out.objective()) {
                assert_eq!(*last, obj);
            }
        }
    }
}

#[test]
fn strict_mode_matches_the_strict_oracle() {
    for inst in common::oracle_set().into_iter().filter(|i| i.num_nurses == 2) {
        for mode in MODES {
            let oracle = solve_bruteforce_with(&inst, mode, true).unwrap();
            let bnb = solve_bnb_with(
                &inst,
                mode,
                &BnbOptions {
                    strict_all_nurses: true,
                    ..BnbOptions::default()
                },
            );
            same_optimum(&inst, &bnb, &oracle);
            if let Some(sol) = &bnb.solution {
                assert!(validate_strict(&inst, sol, mode).ok);
            }
        }
    }
}

#[test]
fn single_threaded_search_is_repeatable() {
    for inst in common::oracle_set().iter().take(10) {
        let a = solve_bnb_with(inst, Mode::Flexible, &BnbOptions::default());
        let b = solve_bnb_with(inst, Mode::Flexible, &BnbOptions::default());
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.nodes_explored, b.nodes_explored);
    }
}

#[test]
fn parallel_search_finds_the_same_objective() {
    for inst in common::oracle_set().iter().take(20) {
        let one = solve_bnb_with(inst, Mode::Flexible, &BnbOptions::default());
        let four = solve_bnb_with(
            inst,
            Mode::Flexible,
            &BnbOptions {
                threads: 4,
                ..BnbOptions::default()
            },
        );
        same_optimum(inst, &four, &one);
    }
}

#[test]
fn heuristic_is_valid_and_never_beats_the_oracle() {
    for inst in common::oracle_set() {
        for mode in MODES {
            let oracle = solve_bruteforce(&inst, mode).unwrap();
            let Ok(sol) = heuristic::solve(&inst, mode, false, &HeuristicConfig::default()) else {
                continue;
            };
            assert!(validate(&inst, &sol, mode).ok, "{} {mode}", inst.name);
            let opt = oracle.objective().expect("heuristic found a solution");
            assert!(sol.objective >= opt - 1e-9);
        }
    }
}

#[test]
fn every_route_obeys_the_endpoint_rule() {
    for inst in common::oracle_set() {
        for mode in MODES {
            let out = solve_bnb_with(&inst, mode, &BnbOptions::default());
            let Some(sol) = out.solution else {
                assert_ne!(out.status, SolveStatus::Optimal);
                continue;
            };
            for route in &sol.routes {
                let (start, end) = match mode {
                    Mode::Flexible => endpoint_requirements(&inst, route.services()).unwrap(),
                    Mode::Classic => (flexroute::Endpoint::Depot, flexroute::Endpoint::Depot),
                };
                assert_eq!((route.start, route.end), (start, end));
            }
        }
    }
}
