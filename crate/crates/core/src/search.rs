//! Phase 2's optimizer: a penalty-guided iterated local search over giant
//! tours, standing in for an off-the-shelf TSP engine.

use std::path::PathBuf;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::candgen::{self, CandidateGraph, NodeRole};
use crate::codec::GiantTour;
use crate::codec::StructuredSolution;
use crate::eval::{evaluate_tour, PenaltyReport};
use crate::model::{DistanceModel, Instance, Objective, VariantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveSet {
    pub two_opt: bool,
    pub or_opt: bool,
    pub relocate: bool,
    pub swap: bool,
    pub marker_retarget: bool,
}

impl Default for MoveSet {
    fn default() -> Self {
        MoveSet { two_opt: true, or_opt: true, relocate: true, swap: true, marker_retarget: true }
    }
}

#[derive(Debug, Clone)]
pub struct SearchSettings {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Iteration cap; runs that end here are exactly reproducible.
    pub max_iterations: Option<u64>,
    /// Double-bridge kicks applied per perturbation.
    pub kick_strength: usize,
    pub move_set: MoveSet,
    pub record_trace: bool,
    /// Two-opt candidate pruning: endpoints drawn from this many nearest
    /// nodes by scaled distance.
    pub two_opt_neighbors: usize,
    /// Stop as soon as a feasible tour with scaled soft penalty at or
    /// below this bound is found (e.g. a known optimum).
    pub target: Option<i64>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            time_limit: 10.0,
            seed: 1,
            max_iterations: None,
            kick_strength: 1,
            move_set: MoveSet::default(),
            record_trace: false,
            two_opt_neighbors: 10,
            target: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_tour: GiantTour,
    pub best_solution: StructuredSolution,
    pub best_penalty: PenaltyReport,
    pub iteration_found: u64,
    pub iterations: u64,
    pub wall_time: f64,
    /// (iteration, best total penalty) at every improvement.
    pub trace: Option<Vec<(u64, f64)>>,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("time limit must be positive")]
    BadTimeLimit,
    #[error("graph/config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unsatisfiable configuration: {0}")]
    Unsatisfiable(String),
    #[error(transparent)]
    Candgen(#[from] candgen::CandgenError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tour moves. Every move keeps position 0 (the primary depot node) fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// Reverse order[i..=j], 1 <= i < j.
    TwoOpt { i: usize, j: usize },
    /// Move the block order[from..from+len] so it starts at `to` (index in
    /// the tour after removal).
    OrOpt { from: usize, len: usize, to: usize },
    Swap { i: usize, j: usize },
    /// Reassign a customer's markers: None = truck-served, Some = sortie
    /// with the given launch/retrieval copy node ids and an insertion
    /// offset for the retrieval marker.
    Retarget { color: usize, sortie: Option<(usize, usize, usize)> },
}

impl Move {
    /// The move undoing this one (structural moves only; `Retarget` has no
    /// algebraic inverse and is excluded from round-trip checks).
    pub fn inverse(&self) -> Option<Move> {
        match *self {
            Move::TwoOpt { i, j } => Some(Move::TwoOpt { i, j }),
            Move::Swap { i, j } => Some(Move::Swap { i, j }),
            Move::OrOpt { from, len, to } => Some(Move::OrOpt { from: to, len, to: from }),
            Move::Retarget { .. } => None,
        }
    }
}

/// Apply a move, returning the new order.
pub fn apply_move(order: &[usize], mv: &Move, graph: &CandidateGraph) -> Vec<usize> {
    let mut out = order.to_vec();
    match *mv {
        Move::TwoOpt { i, j } => {
            if i < j && j < out.len() {
                out[i..=j].reverse();
            }
        }
        Move::Swap { i, j } => {
            if i < out.len() && j < out.len() {
                out.swap(i, j);
            }
        }
        Move::OrOpt { from, len, to } => {
            if from >= 1 && from + len <= out.len() && to >= 1 {
                let block: Vec<usize> = out.drain(from..from + len).collect();
                let to = to.min(out.len());
                for (offset, id) in block.into_iter().enumerate() {
                    out.insert(to + offset, id);
                }
            }
        }
        Move::Retarget { color, sortie } => {
            let copies: Vec<usize> = graph
                .color_set(color)
                .iter()
                .filter(|nd| nd.role == NodeRole::CandidateCopy)
                .map(|nd| nd.node_id)
                .collect();
            out.retain(|id| !copies.contains(id));
            let self_id = match graph.customer_self(color) {
                Some(nd) => nd.node_id,
                None => return out,
            };
            let vpos = out.iter().position(|&id| id == self_id).unwrap();
            match sortie {
                None => {
                    // Truck-served: park every copy right after the self.
                    for (offset, &id) in copies.iter().enumerate() {
                        out.insert(vpos + 1 + offset, id);
                    }
                }
                Some((launch, retrieval, retrieval_offset)) => {
                    // Ghosts, then the launch marker, immediately before the
                    // self; the retrieval marker goes after it.
                    let mut at = vpos;
                    for &id in &copies {
                        if id != launch && id != retrieval {
                            out.insert(at, id);
                            at += 1;
                        }
                    }
                    out.insert(at, launch);
                    at += 1;
                    let rpos = (at + 1 + retrieval_offset).min(out.len());
                    out.insert(rpos, retrieval);
                }
            }
        }
    }
    out
}

/// Nearest-neighbor initial tour: customers in greedy truck order, each
/// self followed by its parked copies; separators split the sequence into
/// roughly equal chunks for multi-truck variants.
pub fn initial_tour(graph: &CandidateGraph, dm: &DistanceModel, trucks: usize) -> GiantTour {
    let n = graph.colors;
    let mut remaining: Vec<usize> = (1..=n).collect();
    let mut sequence = Vec::with_capacity(n);
    let mut here = 0usize; // location id
    while !remaining.is_empty() {
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &c)| {
                let loc = graph.customer_self(c).map(|nd| nd.physical_loc).unwrap_or(0);
                (dm.truck_time_scaled(here, loc), c)
            })
            .unwrap();
        here = graph.customer_self(best).map(|nd| nd.physical_loc).unwrap_or(0);
        sequence.push(best);
        remaining.remove(pos);
    }

    let trucks = trucks.max(1);
    let chunk = n.div_ceil(trucks);
    let mut order = vec![0usize];
    let mut next_separator = graph.len();
    for (i, &c) in sequence.iter().enumerate() {
        if i > 0 && i % chunk == 0 && next_separator < graph.len() + trucks - 1 {
            order.push(next_separator);
            next_separator += 1;
        }
        order.push(graph.customer_self(c).unwrap().node_id);
        for nd in graph.color_set(c) {
            if nd.role == NodeRole::CandidateCopy {
                order.push(nd.node_id);
            }
        }
    }
    while next_separator < graph.len() + trucks - 1 {
        order.push(next_separator);
        next_separator += 1;
    }
    GiantTour { order }
}

fn double_bridge(order: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = order.len();
    if n < 5 {
        return order.to_vec();
    }
    let mut cuts = [0usize; 3];
    for c in cuts.iter_mut() {
        *c = rng.gen_range(1..n);
    }
    cuts.sort_unstable();
    let (a, b, c) = (cuts[0], cuts[1], cuts[2]);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&order[..a]);
    out.extend_from_slice(&order[b..c]);
    out.extend_from_slice(&order[a..b]);
    out.extend_from_slice(&order[c..]);
    out
}

/// Per-node "active" flags: depot, selves and the copies currently acting
/// as launch or retrieval markers. Every other copy is a transparent ghost
/// whose position never changes the decoded plan, so structural moves can
/// skip it; marker placements are covered exhaustively by `Retarget`.
fn active_flags(order: &[usize], graph: &CandidateGraph) -> Vec<bool> {
    let gl = graph.len();
    let mut active = vec![false; gl];
    for nd in &graph.nodes {
        if nd.role != NodeRole::CandidateCopy {
            active[nd.node_id] = true;
        }
    }
    for (p, &id) in order.iter().enumerate() {
        if p == 0 || id >= gl || graph.nodes[id].role != NodeRole::CustomerSelf {
            continue;
        }
        let color = graph.nodes[id].color_id;
        let prev = order[p - 1];
        let launches = prev < gl
            && graph.nodes[prev].role == NodeRole::CandidateCopy
            && graph.nodes[prev].color_id == color;
        if launches {
            active[prev] = true;
            for &q in &order[p + 1..] {
                if q >= gl || graph.nodes[q].role == NodeRole::Depot {
                    break;
                }
                if graph.nodes[q].role == NodeRole::CandidateCopy
                    && graph.nodes[q].color_id == color
                {
                    active[q] = true;
                    break;
                }
            }
        }
    }
    active
}

/// Enumerate the pruned neighborhood of a tour in a deterministic order;
/// the caller shuffles and scans first-improvement style.
fn move_list(
    order: &[usize],
    graph: &CandidateGraph,
    settings: &SearchSettings,
    neighbors: &[Vec<usize>],
) -> Vec<Move> {
    let len = order.len();
    let gl = graph.len();
    let ms = settings.move_set;
    let mut moves = Vec::new();
    if len < 3 {
        return moves;
    }
    let mut position = vec![0usize; gl + len];
    for (p, &id) in order.iter().enumerate() {
        position[id] = p;
    }
    let active = active_flags(order, graph);
    let act = |id: usize| id >= gl || active[id];
    let mut active_prefix = vec![0usize; len + 1];
    for p in 0..len {
        active_prefix[p + 1] = active_prefix[p] + act(order[p]) as usize;
    }
    if ms.two_opt {
        for i in 1..len {
            let node = order[i];
            if node >= gl || !active[node] {
                continue;
            }
            for &other in &neighbors[node] {
                if !act(other) {
                    continue;
                }
                let j = position[other];
                if j > i + 1 {
                    moves.push(Move::TwoOpt { i, j });
                }
            }
        }
    }
    if ms.or_opt || ms.relocate {
        let blocks: &[usize] = if ms.or_opt { &[1, 2, 3] } else { &[1] };
        for &block in blocks {
            if block + 2 > len {
                continue;
            }
            for from in 1..len - block + 1 {
                if active_prefix[from + block] == active_prefix[from] {
                    continue; // ghost-only block
                }
                for to in 1..len - block + 1 {
                    if to != from && (to == 1 || act(order[to - 1])) {
                        moves.push(Move::OrOpt { from, len: block, to });
                    }
                }
            }
        }
    }
    if ms.swap {
        for i in 1..len {
            if !act(order[i]) {
                continue;
            }
            for j in i + 1..len {
                if act(order[j]) {
                    moves.push(Move::Swap { i, j });
                }
            }
        }
    }
    if ms.marker_retarget {
        for color in 1..=graph.colors {
            let copies: Vec<usize> = graph
                .color_set(color)
                .iter()
                .filter(|nd| nd.role == NodeRole::CandidateCopy)
                .map(|nd| nd.node_id)
                .collect();
            if copies.is_empty() {
                continue;
            }
            moves.push(Move::Retarget { color, sortie: None });
            let self_id = graph.customer_self(color).unwrap().node_id;
            // Retrieval placements are only distinct where they cross an
            // active node, measured on the order with this color's copies
            // removed (the state `apply_move` rebuilds from).
            let stripped: Vec<usize> =
                order.iter().copied().filter(|id| !copies.contains(id)).collect();
            let vs = stripped.iter().position(|&id| id == self_id).unwrap();
            let mut offsets = vec![0usize];
            for (i, &id) in stripped[vs + 1..].iter().enumerate() {
                if act(id) {
                    offsets.push(i + 1);
                }
            }
            for &launch in &copies {
                for &retrieval in &copies {
                    if launch == retrieval {
                        continue;
                    }
                    for &offset in &offsets {
                        moves.push(Move::Retarget {
                            color,
                            sortie: Some((launch, retrieval, offset)),
                        });
                    }
                }
            }
        }
    }
    moves
}

fn nearest_neighbors(graph: &CandidateGraph, count: usize) -> Vec<Vec<usize>> {
    let n = graph.len();
    (0..n)
        .map(|a| {
            let mut ids: Vec<usize> = (0..n).filter(|&b| b != a).collect();
            ids.sort_by_key(|&b| (graph.distance(a, b), b));
            ids.truncate(count);
            ids
        })
        .collect()
}

/// Penalty-guided iterated local search. Deterministic for a fixed seed when
/// the run ends at the iteration limit.
pub fn solve(
    graph: &CandidateGraph,
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
    settings: &SearchSettings,
) -> Result<SearchResult, SearchError> {
    if settings.time_limit <= 0.0 {
        return Err(SearchError::BadTimeLimit);
    }
    if let Some(m) = graph.capacity {
        if m != config.drone_count {
            return Err(SearchError::ConfigMismatch(format!(
                "file CAPACITY {} vs configured drone count {}",
                m, config.drone_count
            )));
        }
    }
    if let Some(v) = graph.vehicles {
        if v != config.truck_count {
            return Err(SearchError::ConfigMismatch(format!(
                "file VEHICLES {} vs configured truck count {}",
                v, config.truck_count
            )));
        }
    }
    if graph.colors == 0 {
        return Err(SearchError::Unsatisfiable("no customers".into()));
    }
    if config.truck_count == 0 {
        return Err(SearchError::Unsatisfiable("zero trucks cannot serve customers".into()));
    }

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let neighbors = nearest_neighbors(graph, settings.two_opt_neighbors);

    let mut current = initial_tour(graph, dm, config.truck_count);
    let mut current_eval = evaluate_tour(&current, graph, instance, dm, config);
    let mut best = current.clone();
    let mut best_eval = current_eval.clone();
    let mut iteration_found = 0u64;
    let mut trace: Vec<(u64, f64)> = vec![(0, best_eval.report.total_penalty)];

    let reached = |report: &crate::eval::PenaltyReport| match settings.target {
        Some(bound) => report.counts.total() == 0 && report.soft_scaled <= bound,
        None => false,
    };

    let mut iterations = 0u64; // evaluation count
    let mut kicks_without_progress = 0u32;
    if !reached(&best_eval.report) {
    'outer: loop {
        // One first-improvement pass over the shuffled neighborhood.
        let mut moves = move_list(&current.order, graph, settings, &neighbors);
        moves.shuffle(&mut rng);
        let mut improved = false;
        for mv in &moves {
            if let Some(cap) = settings.max_iterations {
                if iterations >= cap {
                    break 'outer;
                }
            }
            if iterations % 128 == 0 && start.elapsed().as_secs_f64() >= settings.time_limit {
                break 'outer;
            }
            iterations += 1;
            let cand = GiantTour { order: apply_move(&current.order, mv, graph) };
            let cand_eval = evaluate_tour(&cand, graph, instance, dm, config);
            if cand_eval.report.key() < current_eval.report.key() {
                current = cand;
                current_eval = cand_eval;
                improved = true;
                if current_eval.report.key() < best_eval.report.key() {
                    best = current.clone();
                    best_eval = current_eval.clone();
                    iteration_found = iterations;
                    kicks_without_progress = 0;
                    trace.push((iterations, best_eval.report.total_penalty));
                    if reached(&best_eval.report) {
                        break 'outer;
                    }
                }
                break;
            }
        }
        if !improved {
            // Local optimum: perturb; after repeated fruitless kicks,
            // restart from a fresh shuffle of the best tour.
            kicks_without_progress += 1;
            if kicks_without_progress >= 12 {
                let mut order = best.order.clone();
                order[1..].shuffle(&mut rng);
                current = GiantTour { order };
                kicks_without_progress = 0;
            } else {
                current = best.clone();
                for _ in 0..settings.kick_strength.max(1) {
                    current = GiantTour { order: double_bridge(&current.order, &mut rng) };
                }
                if settings.move_set.marker_retarget && graph.colors > 0 {
                    // Also flip one customer's service mode at random; the
                    // double bridge alone barely disturbs marker structure.
                    let color = rng.gen_range(1..=graph.colors);
                    let copies: Vec<usize> = graph
                        .color_set(color)
                        .iter()
                        .filter(|nd| nd.role == NodeRole::CandidateCopy)
                        .map(|nd| nd.node_id)
                        .collect();
                    if !copies.is_empty() {
                        let sortie = if rng.gen_bool(0.5) || copies.len() < 2 {
                            None
                        } else {
                            let launch = *copies.choose(&mut rng).unwrap();
                            let retrieval = loop {
                                let r = *copies.choose(&mut rng).unwrap();
                                if r != launch {
                                    break r;
                                }
                            };
                            Some((launch, retrieval, rng.gen_range(0..4)))
                        };
                        let mv = Move::Retarget { color, sortie };
                        current = GiantTour { order: apply_move(&current.order, &mv, graph) };
                    }
                }
            }
            current_eval = evaluate_tour(&current, graph, instance, dm, config);
            iterations += 1;
        }
    }
    }

    // Closure: re-evaluate the reported tour from scratch.
    let fresh = evaluate_tour(&best, graph, instance, dm, config);
    debug_assert_eq!(fresh.report, best_eval.report);
    Ok(SearchResult {
        best_penalty: fresh.report.clone(),
        best_solution: fresh,
        best_tour: best,
        iteration_found,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        trace: if settings.record_trace { Some(trace) } else { None },
    })
}

#[derive(Debug, Clone)]
pub struct BatchRow {
    pub instance: String,
    pub objective: f64,
    pub feasible: bool,
    pub dcus: usize,
    pub drones: usize,
    pub routes: usize,
    pub iterations: u64,
    pub time_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    /// Where `.outtour` files go; none written when absent.
    pub out_dir: Option<PathBuf>,
    /// Leave out the wall-time column so re-runs are byte-identical.
    pub omit_timing: bool,
    /// Candidates per customer; default min(7, pool + 1).
    pub k: Option<usize>,
    pub scale: i64,
}

/// One solve per instance with seed = base seed + index; returns the CSV
/// (comma-separated, header, LF) and the raw rows.
pub fn run_batch(
    instances: &[Instance],
    config: &VariantConfig,
    settings: &SearchSettings,
    options: &BatchOptions,
) -> Result<(String, Vec<BatchRow>), SearchError> {
    let scale = if options.scale >= 1 { options.scale } else { 10 };
    let mut rows = Vec::new();
    for (idx, instance) in instances.iter().enumerate() {
        let dm = crate::model::build_distance_model(instance, config, scale)?;
        let k = options.k.unwrap_or_else(|| default_k(instance));
        let graph = candgen::expand_candidates(instance, &dm, config, k)?;
        let mut per_run = settings.clone();
        per_run.seed = settings.seed + idx as u64;
        let result = solve(&graph, instance, &dm, config, &per_run)?;
        let max_airborne = result
            .best_solution
            .schedule
            .as_ref()
            .map(|s| s.routes.iter().map(|r| r.max_airborne.max(usize::from(!r.sortie_timing.is_empty()))).max().unwrap_or(0))
            .unwrap_or(0);
        if let Some(dir) = &options.out_dir {
            std::fs::create_dir_all(dir)?;
            candgen::write_outtour(
                &result.best_tour.order,
                result.best_penalty.soft_objective,
                config.objective == Objective::Cost,
                &instance.name,
                dir,
            )?;
        }
        rows.push(BatchRow {
            instance: instance.name.clone(),
            objective: if result.best_penalty.is_feasible() {
                result.best_penalty.soft_objective
            } else {
                result.best_penalty.total_penalty
            },
            feasible: result.best_penalty.is_feasible(),
            dcus: result.best_solution.drone_served_count(),
            drones: max_airborne,
            routes: result.best_solution.used_routes(),
            iterations: result.iterations,
            time_s: result.wall_time,
        });
    }
    let mut csv = String::new();
    if options.omit_timing {
        csv.push_str("instance,objective,dcus,drones,routes,iter\n");
    } else {
        csv.push_str("instance,objective,dcus,drones,routes,iter,time_s\n");
    }
    for row in &rows {
        let objective =
            candgen::format_objective(row.objective, config.objective == Objective::Cost);
        if options.omit_timing {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.instance, objective, row.dcus, row.drones, row.routes, row.iterations
            ));
        } else {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{:.2}\n",
                row.instance, objective, row.dcus, row.drones, row.routes, row.iterations, row.time_s
            ));
        }
    }
    Ok((csv, rows))
}

/// Default candidates-per-customer: min(7, pool size + 1).
pub fn default_k(instance: &Instance) -> usize {
    let pool = instance.locations.len().saturating_sub(1); // others + depot
    7.min(pool + 1).max(2)
}
