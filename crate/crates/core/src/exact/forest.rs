//! Spanning-forest lower bound on the travel needed to cover a set of
//! patients with at most a given number of routes.
//!
//! Every route leaves some start node, visits a path of patients and
//! enters some terminal. Dropping the start and terminal nodes leaves a
//! forest over the patients with at most one tree per route, so the
//! patient legs cost at least the minimum spanning tree minus its longest
//! edges. Node penalties tighten the bound in the usual Lagrangian way.

/// One patient still to be covered.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    pub node: usize,
    /// Tasks left at the patient. Bounds how many routes may begin or end
    /// there, and a patient with several tasks may be passed more than
    /// once, which restricts its penalty to non-positive values.
    pub copies: usize,
    /// Service time of those tasks.
    pub work: f64,
    /// Cheapest leg into the patient from a start other than the
    /// laboratory.
    pub enter: f64,
    /// Leg from the laboratory, infinite when unusable.
    pub enter_lab: f64,
    /// Cheapest leg to a terminal other than the laboratory.
    pub leave: f64,
    /// Leg to the laboratory, infinite when unusable.
    pub leave_lab: f64,
}

/// Route-level limits of one bound.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Limits {
    pub routes: usize,
    /// Routes that may still begin at the laboratory.
    pub lab_starts: usize,
    /// Routes that may still end at the laboratory.
    pub lab_ends: usize,
    /// Travel plus service time one route can hold.
    pub span: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ForestBound {
    pub value: f64,
    /// Degree minus two for every point in the bounding structure.
    pub slack: Vec<i64>,
}

/// Evaluates the bound for fixed penalties. `dist(a, b)` is the
/// symmetric leg cost between two patient nodes.
pub(crate) fn evaluate(
    points: &[Point],
    penalty: &[f64],
    limits: Limits,
    dist: &dyn Fn(usize, usize) -> f64,
    scratch: &mut Scratch,
) -> ForestBound {
    let n = points.len();
    if n == 0 {
        return ForestBound {
            value: 0.0,
            slack: Vec::new(),
        };
    }
    let copies: usize = points.iter().map(|p| p.copies).sum();
    let routes = limits.routes.min(copies).min(n);
    if routes == 0 {
        return ForestBound {
            value: f64::INFINITY,
            slack: vec![0; n],
        };
    }

    // Prim on the penalised complete graph
    scratch.reset(n);
    let cost = |i: usize, j: usize| dist(points[i].node, points[j].node) + penalty[i] + penalty[j];
    scratch.in_tree[0] = true;
    for j in 1..n {
        scratch.key[j] = cost(0, j);
        scratch.parent[j] = 0;
    }
    for _ in 1..n {
        let mut pick = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !scratch.in_tree[j] && scratch.key[j] < best {
                best = scratch.key[j];
                pick = j;
            }
        }
        if pick == usize::MAX {
            break;
        }
        scratch.in_tree[pick] = true;
        scratch.edges.push((best, scratch.parent[pick], pick));
        for j in 0..n {
            if !scratch.in_tree[j] {
                let c = cost(pick, j);
                if c < scratch.key[j] {
                    scratch.key[j] = c;
                    scratch.parent[j] = pick;
                }
            }
        }
    }
    scratch
        .edges
        .sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let tree: f64 = scratch.edges.iter().map(|e| e.0).sum();

    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    // the laboratory serves at most `lab.starts` routes, so only that many
    // of its cheapest legs compete with the others
    for (i, p) in points.iter().enumerate() {
        if p.enter_lab.is_finite() {
            scratch.enter.push((p.enter_lab + penalty[i], i));
        }
    }
    scratch.enter.sort_by(order);
    scratch.enter.truncate(limits.lab_starts.min(routes));
    for (i, p) in points.iter().enumerate() {
        if p.leave_lab.is_finite() {
            scratch.leave.push((p.leave_lab + penalty[i], i));
        }
    }
    scratch.leave.sort_by(order);
    scratch.leave.truncate(limits.lab_ends.min(routes));
    for (i, p) in points.iter().enumerate() {
        for _ in 0..p.copies.min(routes) {
            if p.enter.is_finite() {
                scratch.enter.push((p.enter + penalty[i], i));
            }
            if p.leave.is_finite() {
                scratch.leave.push((p.leave + penalty[i], i));
            }
        }
    }
    scratch.enter.sort_by(order);
    scratch.leave.sort_by(order);
    let routes = routes.min(scratch.enter.len()).min(scratch.leave.len());
    if routes == 0 {
        return ForestBound {
            value: f64::INFINITY,
            slack: vec![0; n],
        };
    }

    // too few routes cannot hold the travel and service time
    let work: f64 = points.iter().map(|p| p.work).sum();
    let total_penalty: f64 = penalty.iter().sum();
    let mut best_m = 0;
    let mut best_value = f64::INFINITY;
    let mut dropped = 0.0;
    let mut ends = 0.0;
    for m in 1..=routes {
        if m >= 2 {
            dropped += scratch.edges[m - 2].0;
        }
        ends += scratch.enter[m - 1].0 + scratch.leave[m - 1].0;
        let v = tree - dropped + ends;
        if v - 2.0 * total_penalty + work > m as f64 * limits.span + 1e-9 {
            continue;
        }
        if v < best_value - 1e-12 {
            best_value = v;
            best_m = m;
        }
    }

    if best_m == 0 {
        return ForestBound {
            value: f64::INFINITY,
            slack: vec![0; n],
        };
    }
    let mut degree = vec![0i64; n];
    for &(_, a, b) in &scratch.edges[best_m - 1..] {
        degree[a] += 1;
        degree[b] += 1;
    }
    for &(_, i) in scratch.enter[..best_m].iter().chain(&scratch.leave[..best_m]) {
        degree[i] += 1;
    }
    ForestBound {
        value: best_value - 2.0 * total_penalty,
        slack: degree.iter().map(|d| d - 2).collect(),
    }
}

/// Reusable buffers for [`evaluate`].
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    in_tree: Vec<bool>,
    key: Vec<f64>,
    parent: Vec<usize>,
    edges: Vec<(f64, usize, usize)>,
    enter: Vec<(f64, usize)>,
    leave: Vec<(f64, usize)>,
}

impl Scratch {
    fn reset(&mut self, n: usize) {
        self.in_tree.clear();
        self.in_tree.resize(n, false);
        self.key.clear();
        self.key.resize(n, f64::INFINITY);
        self.parent.clear();
        self.parent.resize(n, 0);
        self.edges.clear();
        self.enter.clear();
        self.leave.clear();
    }
}

/// Keeps penalties of patients that may be passed more than once
/// non-positive.
pub(crate) fn project(points: &[Point], penalty: &mut [f64]) {
    for (p, pi) in points.iter().zip(penalty.iter_mut()) {
        if p.copies > 1 && *pi > 0.0 {
            *pi = 0.0;
        }
    }
}

/// Subgradient ascent on the penalties of a sum of independent bounds,
/// one per point set, each with its own route limit. Returns the best
/// total seen and leaves the matching penalties in `penalties`.
pub(crate) fn ascend(
    sets: &[(Vec<Point>, Limits)],
    penalties: &mut [Vec<f64>],
    dist: &dyn Fn(usize, usize) -> f64,
    upper: f64,
    iterations: usize,
    scratch: &mut Scratch,
) -> f64 {
    let eval_all = |penalties: &[Vec<f64>], scratch: &mut Scratch| -> (f64, Vec<ForestBound>) {
        let parts: Vec<ForestBound> = sets
            .iter()
            .zip(penalties)
            .map(|((pts, limits), pen)| evaluate(pts, pen, *limits, dist, scratch))
            .collect();
        (parts.iter().map(|b| b.value).sum(), parts)
    };
    for ((pts, _), pen) in sets.iter().zip(penalties.iter_mut()) {
        project(pts, pen);
    }
    let (mut best, mut current) = eval_all(penalties, scratch);
    if !best.is_finite() || iterations == 0 {
        return best;
    }
    let mut best_penalties = penalties.to_vec();
    let mut value = best;
    let mut alpha = 2.0;
    let mut stale = 0;
    for _ in 0..iterations {
        let norm: f64 = current
            .iter()
            .flat_map(|b| &b.slack)
            .map(|&g| (g * g) as f64)
            .sum();
        if norm == 0.0 || upper <= value {
            break;
        }
        let step = alpha * (upper - value) / norm;
        for (((pts, _), pen), part) in sets.iter().zip(penalties.iter_mut()).zip(&current) {
            for (pi, &g) in pen.iter_mut().zip(&part.slack) {
                *pi += step * g as f64;
            }
            project(pts, pen);
        }
        (value, current) = eval_all(penalties, scratch);
        if value > best + 1e-9 {
            best = value;
            best_penalties.clone_from_slice(penalties);
            stale = 0;
        } else {
            stale += 1;
            if stale >= 5 {
                alpha *= 0.5;
                stale = 0;
            }
        }
    }
    penalties.clone_from_slice(&best_penalties);
    best
}
