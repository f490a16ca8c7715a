//! Depth-first branch-and-bound over per-nurse visit sequences.
//!
//! Routes are built nurse by nurse. At each node the open route is either
//! closed or extended by one unassigned task, in that order and with tasks
//! by ascending id, so the search visits partial solutions in
//! lexicographic order of (nurse, visit order). Equal-cost ties therefore
//! resolve to the lexicographically smallest solution.
//!
//! The open route carries two timing tracks, one per possible start
//! endpoint. The depot track dies as soon as a task needing a laboratory
//! start joins the route; the laboratory track is only usable once such a
//! task is present. Start times are always earliest-feasible, which is
//! optimal for a fixed sequence since waiting is free.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::Instant;

use super::forest::{self, Limits, Point, Scratch};
use super::{improves, solution_key, SearchLimits, SolveOutcome, SolveStatus};
use crate::heuristic::{self, HeuristicConfig};
use crate::model::{
    build_route, Endpoint, Instance, Mode, Solution, Task, TaskTable, OBJ_TOL, TIME_TOL,
};
use crate::validate::{validate, validate_strict};

#[derive(Debug, Clone)]
pub struct BnbOptions {
    pub limits: SearchLimits,
    /// Forbid idle nurses.
    pub strict_all_nurses: bool,
    /// Worker threads for the top-level branches; 1 is fully deterministic.
    pub threads: usize,
    /// Drop the laboratory start track as soon as it cannot be used. Off
    /// only for debugging.
    pub endpoint_pruning: bool,
    /// Prune states dominated in cost and time by an earlier state with
    /// the same assigned set and position.
    pub dominance: bool,
    /// Seed the incumbent with the greedy + local search heuristic.
    pub warm_start: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            limits: SearchLimits::default(),
            strict_all_nurses: false,
            threads: 1,
            endpoint_pruning: true,
            dominance: true,
            warm_start: true,
        }
    }
}

pub fn solve_bnb(instance: &Instance, mode: Mode, limits: &SearchLimits) -> SolveOutcome {
    solve_bnb_with(
        instance,
        mode,
        &BnbOptions {
            limits: limits.clone(),
            ..BnbOptions::default()
        },
    )
}

const NONE: usize = usize::MAX;

/// Subgradient steps spent on the root penalties.
const ROOT_ASCENT: usize = 300;

struct Ctx<'a> {
    inst: &'a Instance,
    mode: Mode,
    strict: bool,
    tasks: Vec<Task>,
    /// `qualified[k][t]`
    qualified: Vec<Vec<bool>>,
    /// Highest nurse index qualified for each task.
    last_nurse: Vec<usize>,
    start_flag: Vec<bool>,
    end_flag: Vec<bool>,
    /// Shortest-path closure of the travel matrix, a lower bound on any
    /// multi-leg travel.
    closure: Vec<Vec<f64>>,
    /// Symmetric leg costs for the forest bound.
    sym: Vec<Vec<f64>>,
    /// Longest travel plus service time any route can fit: every service
    /// ends by the latest window close plus its duration, and one more
    /// leg reaches the terminal.
    route_span: f64,
    /// Nurses qualified for each task, as a bit set.
    qual_mask: Vec<u64>,
    /// Nurse partitions whose forest bounds are summed at every node.
    partitions: Vec<Partition>,
    endpoint_pruning: bool,
    dominance: bool,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a Instance, mode: Mode, opts: &BnbOptions) -> Self {
        let tasks = TaskTable::new(inst).tasks;
        let v = inst.num_nurses;
        let qualified: Vec<Vec<bool>> = (0..v)
            .map(|k| tasks.iter().map(|t| inst.is_qualified(k, t.service)).collect())
            .collect();
        let last_nurse = (0..tasks.len())
            .map(|t| (0..v).rev().find(|&k| qualified[k][t]).unwrap_or(NONE))
            .collect();
        let flexible = mode == Mode::Flexible;
        let start_flag = tasks
            .iter()
            .map(|t| flexible && inst.requires_lab_start(t.service))
            .collect();
        let end_flag = tasks
            .iter()
            .map(|t| flexible && inst.requires_lab_end(t.service))
            .collect();
        let mut closure = inst.travel_time.clone();
        let m = closure.len();
        for via in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let alt = closure[i][via] + closure[via][j];
                    if alt < closure[i][j] {
                        closure[i][j] = alt;
                    }
                }
            }
        }
        let qual_mask = (0..tasks.len())
            .map(|t| {
                if v > 64 {
                    return 0;
                }
                (0..v).filter(|&k| qualified[k][t]).fold(0u64, |acc, k| acc | (1 << k))
            })
            .collect();
        let sym = (0..m)
            .map(|i| (0..m).map(|j| closure[i][j].min(closure[j][i])).collect())
            .collect();
        let last_finish = tasks
            .iter()
            .map(|t| t.window.1 + t.duration)
            .fold(0.0, f64::max);
        let last_leg = (1..=inst.num_patients)
            .flat_map(|p| [closure[p][inst.depot()], closure[p][inst.lab()]])
            .fold(0.0, f64::max);
        Ctx {
            route_span: last_finish + last_leg,
            inst,
            mode,
            strict: opts.strict_all_nurses,
            tasks,
            qualified,
            last_nurse,
            start_flag,
            end_flag,
            closure,
            sym,
            qual_mask,
            partitions: Vec::new(),
            endpoint_pruning: opts.endpoint_pruning,
            dominance: opts.dominance,
        }
    }

    fn t(&self, from: usize, to: usize) -> f64 {
        self.inst.travel_time[from][to]
    }

    fn fresh_tracks(&self, k: usize) -> [Track; 2] {
        let lab_possible = self.mode == Mode::Flexible
            && (!self.endpoint_pruning
                || (0..self.tasks.len()).any(|t| self.start_flag[t] && self.qualified[k][t]));
        [
            Track {
                alive: true,
                cost: 0.0,
                time: 0.0,
            },
            Track {
                alive: lab_possible,
                cost: 0.0,
                time: 0.0,
            },
        ]
    }
}

/// Timing of the open route under one start endpoint: travel so far and
/// the time the last service ends.
#[derive(Debug, Clone, Copy)]
struct Track {
    alive: bool,
    cost: f64,
    time: f64,
}

/// Tasks whose qualified nurses all lie in one block must be served by
/// that block's routes, so the blocks' forest bounds add up.
#[derive(Debug, Clone)]
struct Partition {
    blocks: Vec<u64>,
    /// Penalty per block, by patient node.
    penalty: Vec<Vec<f64>>,
}

/// Partitions of up to this many nurses are all tried at the root.
const MAX_ENUMERATED_NURSES: usize = 6;
/// Partitions kept for the search.
const KEPT_PARTITIONS: usize = 3;

fn nurse_partitions(v: usize) -> Vec<Vec<u64>> {
    if v == 0 || v > 64 {
        return Vec::new();
    }
    let all = if v == 64 { u64::MAX } else { (1u64 << v) - 1 };
    if v > MAX_ENUMERATED_NURSES {
        return vec![vec![all], (0..v).map(|k| 1u64 << k).collect()];
    }
    // restricted growth strings
    let mut out = Vec::new();
    let mut label = vec![0usize; v];
    loop {
        let blocks = label.iter().copied().max().unwrap_or(0) + 1;
        let mut masks = vec![0u64; blocks];
        for (k, &b) in label.iter().enumerate() {
            masks[b] |= 1 << k;
        }
        out.push(masks);
        let mut i = v - 1;
        loop {
            if i == 0 {
                return out;
            }
            let limit = label[..i].iter().copied().max().unwrap_or(0) + 1;
            if label[i] < limit {
                label[i] += 1;
                for x in label.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

const ORIGINS: [Endpoint; 2] = [Endpoint::Depot, Endpoint::Lab];

#[derive(Debug, Clone, Copy)]
struct Label {
    tracks: [Track; 2],
    committed: f64,
}

impl Label {
    fn dominates(&self, other: &Label) -> bool {
        self.tracks.iter().zip(&other.tracks).all(|(mine, theirs)| {
            !theirs.alive
                || (mine.alive
                    && self.committed + mine.cost <= other.committed + theirs.cost
                    && mine.time <= theirs.time)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct DomKey {
    nurse: usize,
    assigned: u128,
    last: usize,
    has_start: bool,
    has_end: bool,
}

/// Caps the dominance store so memory stays bounded on long runs.
const MAX_LABELS: usize = 4_000_000;

struct Shared {
    best: AtomicU64,
    claim: AtomicUsize,
    clock: Instant,
}

impl Shared {
    fn best(&self) -> f64 {
        f64::from_bits(self.best.load(Ordering::Relaxed))
    }

    fn offer(&self, cost: f64) {
        let _ = self
            .best
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |cur| {
                (cost < f64::from_bits(cur)).then_some(cost.to_bits())
            });
    }
}

struct Search<'c, 'a> {
    ctx: &'c Ctx<'a>,
    shared: &'c Shared,
    limits: &'c SearchLimits,
    node_limit: u64,
    assigned: Vec<bool>,
    mask: u128,
    /// Unassigned tasks per patient node.
    pending: Vec<usize>,
    routes: Vec<Vec<usize>>,
    committed: f64,
    incumbent: Option<(f64, Vec<Vec<usize>>)>,
    trace: Vec<f64>,
    nodes: u64,
    aborted: bool,
    labels: HashMap<DomKey, Vec<Label>>,
    label_count: usize,
    /// Top-level branch claiming for parallel runs.
    split_root: bool,
    points: Vec<Point>,
    point_penalty: Vec<f64>,
    copies: Vec<usize>,
    work: Vec<f64>,
    latest: Vec<f64>,
    scratch: Scratch,
}

impl<'c, 'a> Search<'c, 'a> {
    fn new(ctx: &'c Ctx<'a>, shared: &'c Shared, limits: &'c SearchLimits, node_limit: u64) -> Self {
        let mut pending = vec![0; ctx.inst.num_patients + 2];
        for t in &ctx.tasks {
            pending[t.patient] += 1;
        }
        Search {
            ctx,
            shared,
            limits,
            node_limit,
            assigned: vec![false; ctx.tasks.len()],
            mask: 0,
            pending,
            routes: vec![Vec::new(); ctx.inst.num_nurses],
            committed: 0.0,
            incumbent: None,
            trace: Vec::new(),
            nodes: 0,
            aborted: false,
            labels: HashMap::new(),
            label_count: 0,
            split_root: false,
            points: Vec::new(),
            point_penalty: Vec::new(),
            copies: Vec::new(),
            work: Vec::new(),
            latest: Vec::new(),
            scratch: Scratch::default(),
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.nodes >= self.node_limit
            || (self.nodes % 256 == 0 && self.shared.clock.elapsed() >= self.limits.time_limit)
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn loc(&self, k: usize, origin: usize) -> usize {
        match self.routes[k].last() {
            Some(&t) => self.ctx.tasks[t].patient,
            None => self.ctx.inst.node_of(ORIGINS[origin]),
        }
    }

    /// Tracks after appending task `t` to nurse `k`'s open route.
    fn extend(&self, k: usize, tracks: &[Track; 2], t: usize) -> Option<[Track; 2]> {
        let task = &self.ctx.tasks[t];
        let mut out = *tracks;
        for (o, tr) in out.iter_mut().enumerate() {
            if !tr.alive {
                continue;
            }
            if o == 0 && self.ctx.start_flag[t] {
                tr.alive = false;
                continue;
            }
            let leg = self.ctx.t(self.loc(k, o), task.patient);
            let begin = (tr.time + leg).max(task.window.0);
            if begin > task.window.1 + TIME_TOL {
                tr.alive = false;
                continue;
            }
            tr.cost += leg;
            tr.time = begin + task.duration;
        }
        (out[0].alive || out[1].alive).then_some(out)
    }

    /// Could some completion of the current partial solution be
    /// lexicographically smaller than the incumbent?
    fn may_precede_incumbent(&self, k: usize) -> bool {
        let Some((_, inc)) = &self.incumbent else {
            return true;
        };
        for r in 0..k {
            match self.routes[r].cmp(&inc[r]) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        let seq = &self.routes[k];
        let target = &inc[k];
        for (a, b) in seq.iter().zip(target) {
            if a != b {
                return a < b;
            }
        }
        seq.len() <= target.len()
    }

    fn should_prune(&self, k: usize, lower: f64) -> bool {
        if lower > self.shared.best() + OBJ_TOL {
            return true;
        }
        match &self.incumbent {
            None => false,
            Some((best, _)) => {
                lower > best + OBJ_TOL || (lower >= best - OBJ_TOL && !self.may_precede_incumbent(k))
            }
        }
    }

    /// Admissible bound on travel still to be added, excluding the open
    /// route's committed legs. Uses the larger of two arc-disjoint counts:
    /// one entering arc per pending patient plus the open route's closing
    /// arc, or one leaving arc per pending patient plus the open route's
    /// next arc.
    fn remaining_bound(&self, k: usize, tracks: &[Track; 2], has_end: bool) -> f64 {
        let ctx = self.ctx;
        let inst = ctx.inst;
        let flexible = ctx.mode == Mode::Flexible;
        let depot = inst.depot();
        let lab = inst.lab();
        let future = k + 1 < inst.num_nurses;
        let current = self.routes[k].last().map(|&t| ctx.tasks[t].patient);

        let pending: Vec<usize> = (1..=inst.num_patients)
            .filter(|&p| self.pending[p] > 0)
            .collect();

        let mut origins: Vec<usize> = Vec::with_capacity(2);
        if future {
            origins.push(depot);
            if flexible {
                origins.push(lab);
            }
        }
        if current.is_none() {
            if tracks[0].alive && !origins.contains(&depot) {
                origins.push(depot);
            }
            if tracks[1].alive && !origins.contains(&lab) {
                origins.push(lab);
            }
        }
        let terminals: &[usize] = if flexible { &[depot, lab] } else { &[depot] };

        let mut inbound = 0.0;
        let mut outbound = 0.0;
        for &p in &pending {
            if Some(p) == current {
                continue;
            }
            let mut best_in = f64::INFINITY;
            for &u in pending.iter().chain(current.iter()).chain(origins.iter()) {
                if u != p {
                    best_in = best_in.min(ctx.t(u, p));
                }
            }
            let mut best_out = f64::INFINITY;
            for &w in pending.iter().chain(terminals.iter()) {
                if w != p {
                    best_out = best_out.min(ctx.t(p, w));
                }
            }
            inbound += best_in;
            outbound += best_out;
        }
        if let Some(c) = current {
            let own_terminals: &[usize] = if has_end { &[lab] } else { terminals };
            let mut close = f64::INFINITY;
            for &u in pending.iter().chain(std::iter::once(&c)) {
                for &w in own_terminals {
                    close = close.min(ctx.t(u, w));
                }
            }
            inbound += close;
            let mut leave = f64::INFINITY;
            for &w in pending.iter().chain(own_terminals.iter()) {
                if w != c {
                    leave = leave.min(ctx.t(c, w));
                }
            }
            outbound += leave;
        }
        inbound.max(outbound)
    }

    /// Collects the pending patients with tasks that only nurses in
    /// `block` (among those still to route) can take, with their cheapest
    /// entering and leaving legs. Returns how many routes the block has
    /// left and how many of them may use the laboratory.
    fn block_points(
        &mut self,
        k: usize,
        tracks: &[Track; 2],
        has_end: bool,
        block: u64,
        penalty: &[f64],
    ) -> Limits {
        let ctx = self.ctx;
        let inst = ctx.inst;
        let flexible = ctx.mode == Mode::Flexible;
        let depot = inst.depot();
        let lab = inst.lab();
        let remaining = if k >= 64 { 0 } else { u64::MAX << k };
        let block = block & remaining;
        let open = block & (1 << k) != 0;
        let future = block & !(1u64 << k) != 0;
        let mut start = None;
        let mut ready = 0.0;
        let mut lab_start = false;
        if open {
            match self.routes[k].last() {
                Some(&t) => {
                    start = Some(ctx.tasks[t].patient);
                    ready = tracks
                        .iter()
                        .filter(|tr| tr.alive)
                        .map(|tr| tr.time)
                        .fold(f64::INFINITY, f64::min);
                }
                None => {
                    if tracks[0].alive {
                        start = Some(depot);
                    }
                    lab_start |= tracks[1].alive;
                }
            }
        }
        if future {
            lab_start |= flexible;
        }
        let mut limits = Limits {
            routes: block.count_ones() as usize,
            lab_starts: 0,
            lab_ends: usize::from(open && has_end),
            span: ctx.route_span,
        };
        self.points.clear();
        self.point_penalty.clear();
        let copies = &mut self.copies;
        copies.clear();
        copies.resize(inst.num_patients + 2, 0);
        let work = &mut self.work;
        work.clear();
        work.resize(inst.num_patients + 2, 0.0);
        let latest = &mut self.latest;
        latest.clear();
        latest.resize(inst.num_patients + 2, f64::NEG_INFINITY);
        for t in 0..ctx.tasks.len() {
            if self.assigned[t] {
                continue;
            }
            let q = ctx.qual_mask[t] & remaining;
            if q & !block == 0 {
                copies[ctx.tasks[t].patient] += 1;
                work[ctx.tasks[t].patient] += ctx.tasks[t].duration;
                let p = ctx.tasks[t].patient;
                latest[p] = latest[p].max(ctx.tasks[t].window.1);
            }
            if q & block != 0 {
                limits.lab_starts += usize::from(ctx.start_flag[t]);
                limits.lab_ends += usize::from(ctx.end_flag[t]);
            }
        }
        let future_depot = future.then_some(depot);
        for p in 1..=inst.num_patients {
            if copies[p] == 0 {
                continue;
            }
            // the open route only reaches patients it can still serve in time
            let enter = start
                .iter()
                .filter(|&&u| ready + ctx.closure[u][p] <= latest[p] + TIME_TOL)
                .chain(future_depot.iter())
                .map(|&u| ctx.closure[u][p])
                .fold(f64::INFINITY, f64::min);
            let enter_lab = if lab_start { ctx.closure[lab][p] } else { f64::INFINITY };
            let leave_lab = if flexible { ctx.closure[p][lab] } else { f64::INFINITY };
            self.points.push(Point {
                node: p,
                copies: copies[p],
                work: work[p],
                enter,
                enter_lab,
                leave: ctx.closure[p][depot],
                leave_lab,
            });
            self.point_penalty.push(penalty[p]);
        }
        forest::project(&self.points, &mut self.point_penalty);
        limits
    }

    fn forest_bound(&mut self, k: usize, tracks: &[Track; 2], has_end: bool) -> f64 {
        let ctx = self.ctx;
        let mut best = 0.0f64;
        for part in &ctx.partitions {
            let mut total = 0.0;
            for (b, &block) in part.blocks.iter().enumerate() {
                let limits = self.block_points(k, tracks, has_end, block, &part.penalty[b]);
                if self.points.is_empty() {
                    continue;
                }
                let sym = &ctx.sym;
                let dist = |a: usize, b: usize| sym[a][b];
                total += forest::evaluate(&self.points, &self.point_penalty, limits, &dist, &mut self.scratch).value;
            }
            best = best.max(total);
        }
        best
    }

    /// Tasks no later nurse can take must still fit the open route, and a
    /// laboratory-only route must still be able to pick up a task that
    /// needs a laboratory start.
    fn still_feasible(&self, k: usize, tracks: &[Track; 2], has_start: bool) -> bool {
        let ctx = self.ctx;
        let need_lab_task = !has_start && !tracks[0].alive;
        let mut lab_task_reachable = false;
        for t in 0..ctx.tasks.len() {
            if self.assigned[t] {
                continue;
            }
            let last = ctx.last_nurse[t];
            if last < k {
                return false;
            }
            let forced = last == k;
            let wanted = need_lab_task && ctx.start_flag[t] && ctx.qualified[k][t];
            if !forced && !wanted {
                continue;
            }
            let task = &ctx.tasks[t];
            let reachable = tracks.iter().enumerate().any(|(o, tr)| {
                tr.alive
                    && !(o == 0 && ctx.start_flag[t])
                    && tr.time + ctx.closure[self.loc(k, o)][task.patient] <= task.window.1 + TIME_TOL
            });
            if forced && !reachable {
                return false;
            }
            if wanted && reachable {
                lab_task_reachable = true;
            }
        }
        !need_lab_task || lab_task_reachable
    }

    /// Records the state, or reports that an earlier one dominates it.
    fn dominated(&mut self, k: usize, tracks: &[Track; 2], has_start: bool, has_end: bool) -> bool {
        if !self.ctx.dominance || self.ctx.tasks.len() > 128 {
            return false;
        }
        let key = DomKey {
            nurse: k,
            assigned: self.mask,
            last: self.routes[k].last().copied().unwrap_or(NONE),
            has_start,
            has_end,
        };
        let label = Label {
            tracks: *tracks,
            committed: self.committed,
        };
        let entry = self.labels.entry(key).or_default();
        if entry.iter().any(|old| old.dominates(&label)) {
            return true;
        }
        let before = entry.len();
        entry.retain(|old| !label.dominates(old));
        let removed = before - entry.len();
        if self.label_count - removed < MAX_LABELS {
            entry.push(label);
            self.label_count = self.label_count - removed + 1;
        } else {
            self.label_count -= removed;
        }
        false
    }

    fn offer(&mut self, cost: f64) {
        let key = &self.routes;
        if improves(cost, key, self.incumbent.as_ref().map(|(c, k)| (*c, k.as_slice()))) {
            self.incumbent = Some((cost, key.clone()));
            self.trace.push(cost);
            self.shared.offer(cost);
        }
    }

    fn dfs(&mut self, k: usize, tracks: [Track; 2], has_start: bool, has_end: bool) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if !self.still_feasible(k, &tracks, has_start) {
            return;
        }
        let open_cost = tracks
            .iter()
            .filter(|tr| tr.alive)
            .map(|tr| tr.cost)
            .fold(f64::INFINITY, f64::min);
        let simple = self.remaining_bound(k, &tracks, has_end);
        let lower = self.committed + open_cost + simple.max(self.forest_bound(k, &tracks, has_end));
        if self.should_prune(k, lower) {
            return;
        }
        if self.dominated(k, &tracks, has_start, has_end) {
            return;
        }

        let at_root = self.split_root && k == 0 && self.routes[0].is_empty();
        let claim = |shared: &Shared| shared.claim.fetch_add(1, Ordering::Relaxed);
        let mut mine = if at_root { claim(self.shared) } else { 0 };
        let mut child = 0usize;

        // close the open route
        if !at_root || child == mine {
            if at_root {
                mine = claim(self.shared);
            }
            self.close(k, &tracks, has_start, has_end);
        }
        child += 1;

        for t in 0..self.ctx.tasks.len() {
            if self.aborted {
                return;
            }
            if self.assigned[t] || !self.ctx.qualified[k][t] {
                continue;
            }
            let Some(next) = self.extend(k, &tracks, t) else {
                continue;
            };
            let this_child = child;
            child += 1;
            if at_root {
                if this_child != mine {
                    continue;
                }
                mine = claim(self.shared);
            }
            let patient = self.ctx.tasks[t].patient;
            self.assigned[t] = true;
            if t < 128 {
                self.mask |= 1u128 << t;
            }
            self.pending[patient] -= 1;
            self.routes[k].push(t);
            self.dfs(
                k,
                next,
                has_start || self.ctx.start_flag[t],
                has_end || self.ctx.end_flag[t],
            );
            self.routes[k].pop();
            self.pending[patient] += 1;
            if t < 128 {
                self.mask &= !(1u128 << t);
            }
            self.assigned[t] = false;
        }
    }

    fn close(&mut self, k: usize, tracks: &[Track; 2], has_start: bool, has_end: bool) {
        let inst = self.ctx.inst;
        let route_cost = match self.routes[k].last() {
            None => {
                if self.ctx.strict {
                    return;
                }
                0.0
            }
            Some(&t) => {
                let tr = if has_start { tracks[1] } else { tracks[0] };
                if !tr.alive {
                    return;
                }
                let end = if has_end { inst.lab() } else { inst.depot() };
                tr.cost + self.ctx.t(self.ctx.tasks[t].patient, end)
            }
        };
        let saved = self.committed;
        self.committed += route_cost;
        if k + 1 == inst.num_nurses {
            if self.assigned.iter().all(|&a| a) {
                let total = self.committed;
                self.offer(total);
            }
        } else {
            let fresh = self.ctx.fresh_tracks(k + 1);
            self.dfs(k + 1, fresh, false, false);
        }
        self.committed = saved;
    }
}

/// Bound at the root of the search tree, before any assignment and
/// without an incumbent to steer the penalties.
pub fn root_lower_bound(instance: &Instance, mode: Mode) -> f64 {
    let opts = BnbOptions {
        limits: SearchLimits {
            node_limit: 1,
            ..SearchLimits::default()
        },
        warm_start: false,
        ..BnbOptions::default()
    };
    solve_bnb_with(instance, mode, &opts).bound
}

pub fn solve_bnb_with(instance: &Instance, mode: Mode, opts: &BnbOptions) -> SolveOutcome {
    let clock = Instant::now();
    if instance.validate().is_err() {
        return SolveOutcome {
            status: SolveStatus::Infeasible,
            solution: None,
            bound: f64::INFINITY,
            nodes_explored: 0,
            wall_time: clock.elapsed().as_secs_f64(),
            incumbent_trace: Vec::new(),
        };
    }
    let mut ctx = Ctx::new(instance, mode, opts);
    let table = TaskTable::new(instance);
    let check = |sol: &Solution| {
        if opts.strict_all_nurses {
            validate_strict(instance, sol, mode).ok
        } else {
            validate(instance, sol, mode).ok
        }
    };

    let mut seed: Option<(f64, Vec<Vec<usize>>)> = None;
    if let Some(sol) = &opts.limits.incumbent {
        if check(sol) {
            seed = Some((sol.objective, solution_key(&table, sol)));
        }
    }
    if opts.warm_start {
        if let Ok(sol) = heuristic::solve(instance, mode, opts.strict_all_nurses, &HeuristicConfig::default()) {
            if check(&sol) {
                let key = solution_key(&table, &sol);
                if improves(sol.objective, &key, seed.as_ref().map(|(c, k)| (*c, k.as_slice()))) {
                    seed = Some((sol.objective, key));
                }
            }
        }
    }

    let shared = Shared {
        best: AtomicU64::new(f64::INFINITY.to_bits()),
        claim: AtomicUsize::new(0),
        clock,
    };
    if let Some((c, _)) = &seed {
        shared.offer(*c);
    }
    let root_tracks = ctx.fresh_tracks(0);
    let simple = {
        let probe = Search::new(&ctx, &shared, &opts.limits, u64::MAX);
        probe.remaining_bound(0, &root_tracks, false)
    };
    let upper = seed.as_ref().map_or(f64::INFINITY, |(c, _)| *c);
    let mut scored: Vec<(f64, Partition)> = Vec::new();
    {
        let mut probe = Search::new(&ctx, &shared, &opts.limits, u64::MAX);
        let zero = vec![0.0; instance.num_patients + 2];
        let sym = &ctx.sym;
        let dist = |a: usize, b: usize| sym[a][b];
        let mut scratch = Scratch::default();
        for blocks in nurse_partitions(instance.num_nurses) {
            let mut sets = Vec::with_capacity(blocks.len());
            let mut penalties = Vec::with_capacity(blocks.len());
            for &block in &blocks {
                let limits = probe.block_points(0, &root_tracks, false, block, &zero);
                sets.push((probe.points.clone(), limits));
                penalties.push(probe.point_penalty.clone());
            }
            let plain: f64 = sets
                .iter()
                .zip(&penalties)
                .map(|((pts, limits), pen)| forest::evaluate(pts, pen, *limits, &dist, &mut scratch).value)
                .sum();
            let target = if upper.is_finite() { upper } else { 2.0 * plain.max(simple) + 1.0 };
            let value = forest::ascend(&sets, &mut penalties, &dist, target, ROOT_ASCENT, &mut scratch);
            let mut by_node = vec![vec![0.0; instance.num_patients + 2]; blocks.len()];
            for (b, ((pts, _), pen)) in sets.iter().zip(&penalties).enumerate() {
                for (pt, &pi) in pts.iter().zip(pen) {
                    by_node[b][pt.node] = pi;
                }
            }
            scored.push((value, Partition { blocks, penalty: by_node }));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let forest_root = scored.first().map_or(0.0, |s| s.0);
    ctx.partitions = scored.into_iter().take(KEPT_PARTITIONS).map(|(_, p)| p).collect();
    let ctx = ctx;
    let root_bound = simple.max(forest_root);

    let threads = opts.threads.max(1);
    let results: Vec<(Option<(f64, Vec<Vec<usize>>)>, Vec<f64>, u64, bool)> = if threads == 1 {
        let mut search = Search::new(&ctx, &shared, &opts.limits, opts.limits.node_limit);
        search.incumbent = seed.clone();
        search.dfs(0, root_tracks, false, false);
        vec![(search.incumbent, search.trace, search.nodes, search.aborted)]
    } else {
        let per_worker = opts.limits.node_limit / threads as u64;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|_| {
                    let ctx = &ctx;
                    let shared = &shared;
                    let seed = seed.clone();
                    scope.spawn(move || {
                        let mut search = Search::new(ctx, shared, &opts.limits, per_worker.max(1));
                        search.split_root = true;
                        search.incumbent = seed;
                        search.dfs(0, root_tracks, false, false);
                        (search.incumbent, search.trace, search.nodes, search.aborted)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("search worker panicked"))
                .collect()
        })
    };

    let mut best: Option<(f64, Vec<Vec<usize>>)> = seed.clone();
    let mut trace: Vec<f64> = seed.iter().map(|(c, _)| *c).collect();
    let mut nodes = 0;
    let mut aborted = false;
    for (inc, tr, n, ab) in results {
        nodes += n;
        aborted |= ab;
        if let Some((c, key)) = inc {
            if improves(c, &key, best.as_ref().map(|(bc, bk)| (*bc, bk.as_slice()))) {
                best = Some((c, key));
            }
        }
        for c in tr {
            if trace.last().is_none_or(|&last| c <= last) {
                trace.push(c);
            }
        }
    }
    if threads > 1 {
        trace.sort_by(|a, b| b.total_cmp(a));
        trace.dedup();
    }

    let solution = best.map(|(_, key)| assemble(instance, mode, &ctx.tasks, &key));
    let status = match (&solution, aborted) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::Feasible,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::Unknown,
    };
    let bound = match (status, &solution) {
        (SolveStatus::Optimal, Some(s)) => s.objective,
        (SolveStatus::Infeasible, _) => f64::INFINITY,
        (_, Some(s)) => root_bound.min(s.objective),
        _ => root_bound,
    };
    SolveOutcome {
        status,
        solution,
        bound,
        nodes_explored: nodes,
        wall_time: clock.elapsed().as_secs_f64(),
        incumbent_trace: trace,
    }
}

fn assemble(instance: &Instance, mode: Mode, tasks: &[Task], key: &[Vec<usize>]) -> Solution {
    let routes = key
        .iter()
        .enumerate()
        .map(|(k, seq)| {
            let chosen: Vec<Task> = seq.iter().map(|&t| tasks[t]).collect();
            build_route(instance, mode, k, &chosen).expect("search only keeps feasible sequences")
        })
        .collect();
    Solution::new(instance, routes).expect("search routes are in range")
}
