//! Phase 1 ingestion and Phase 3 closure: benchmark loaders, solution
//! validation, SVG rendering and results tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::candgen::{self, CandidateGraph, CandgenError};

use crate::codec::{GiantTour, StructuredSolution};
use crate::eval::{evaluate_tour, ViolationCounts};
use crate::model::{
    Customer, DistanceModel, Instance, Location, ModelError, Objective, Variant, VariantConfig,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("instance has no customers")]
    EmptyInstance,
    #[error("solver file covers locations {covered} of 0..={max}; cannot rebuild a model")]
    IncompleteGraph { covered: usize, max: usize },
    #[error("file/configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("output tour file name '{0}' does not start with an objective value")]
    BadStem(String),
    #[error(transparent)]
    Candgen(#[from] CandgenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string()
}

/// One solved instance in a results table, with signed gaps against any
/// number of reference columns. Positive gap = we are better.
#[derive(Debug, Clone)]
pub struct BenchmarkRecord {
    pub instance: String,
    pub variant: Variant,
    pub objective: f64,
    pub feasible: bool,
    /// Drone-served customers.
    pub dcus: usize,
    /// Maximum drones simultaneously airborne.
    pub drones: usize,
    /// Truck routes actually used.
    pub routes: usize,
    pub iteration_found: u64,
    pub wall_time: f64,
    pub gaps: Vec<(String, f64)>,
}

impl BenchmarkRecord {
    pub fn push_gap(&mut self, column: &str, reference: f64) {
        self.gaps.push((column.to_string(), gap_percent(reference, self.objective)));
    }
}

/// Signed percentage gap: 100 * (reference - ours) / reference.
pub fn gap_percent(reference: f64, ours: f64) -> f64 {
    100.0 * (reference - ours) / reference
}

/// Reference values transcribed from published tables, keyed by instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl ReferenceTable {
    /// CSV with an `instance` first column; empty cells mean "not reported".
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, BenchError> {
        let mut lines = text.lines().enumerate();
        let (_, header) =
            lines.next().ok_or_else(|| parse_err(path, 1, "empty reference table"))?;
        let mut columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        if columns.first().map(String::as_str) != Some("instance") {
            return Err(parse_err(path, 1, "header must start with 'instance'"));
        }
        columns.remove(0);
        let mut rows = BTreeMap::new();
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cells = line.split(',').map(str::trim);
            let name = cells.next().unwrap().to_string();
            let mut values = Vec::new();
            for cell in cells {
                if cell.is_empty() || cell == "-" {
                    values.push(None);
                } else {
                    let v = cell.parse().map_err(|_| {
                        parse_err(path, idx + 1, format!("non-numeric cell '{}'", cell))
                    })?;
                    values.push(Some(v));
                }
            }
            if values.len() != columns.len() {
                return Err(parse_err(
                    path,
                    idx + 1,
                    format!("{} cells, expected {}", values.len(), columns.len()),
                ));
            }
            rows.insert(name, values);
        }
        Ok(ReferenceTable { columns, rows })
    }

    pub fn get(&self, instance: &str, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.get(instance)?.get(c).copied().flatten()
    }
}

/// Results table as CSV: one gap row per record against `column`, plus a
/// trailing average over the rows that have a reference value.
pub fn gap_table(
    records: &[BenchmarkRecord],
    reference: &ReferenceTable,
    column: &str,
) -> String {
    let mut out = String::from("instance,objective,reference,gap_pct\n");
    let mut gaps = Vec::new();
    for rec in records {
        match reference.get(&rec.instance, column) {
            Some(z) => {
                let gap = gap_percent(z, rec.objective);
                gaps.push(gap);
                writeln!(out, "{},{:.5},{},{:.2}", rec.instance, rec.objective, z, gap).unwrap();
            }
            None => writeln!(out, "{},{:.5},-,-", rec.instance, rec.objective).unwrap(),
        }
    }
    let avg = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
    writeln!(out, "average,,,{:.2}", avg).unwrap();
    out
}

/// Coordinate list, depot first, one "x y" pair per line; '#' comments. All
/// customers are drone-eligible and carry no demands.
pub fn load_poikonen(path: &Path) -> Result<Instance, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(parse_err(path, idx + 1, format!("expected 'x y', got '{}'", line)));
        }
        let x = nums[0]
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("bad coordinate '{}'", nums[0])))?;
        let y = nums[1]
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("bad coordinate '{}'", nums[1])))?;
        coords.push((x, y));
    }
    if coords.len() < 2 {
        return Err(BenchError::EmptyInstance);
    }
    Instance::from_coords(&stem_of(path), &coords, None, f64::INFINITY, "set4")
        .map_err(BenchError::from)
}

/// Inverse of `load_poikonen`, for golden-file fixtures.
pub fn write_poikonen(instance: &Instance, path: &Path) -> Result<(), BenchError> {
    let mut out = String::new();
    for loc in &instance.locations {
        writeln!(out, "{} {}", loc.x, loc.y).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Depot line "x y", then customer lines "x y demand" (kg); '#' comments.
/// Drone eligibility is demand <= the drone payload of the cost-variant
/// parameter block.
pub fn load_sacramento(path: &Path) -> Result<Instance, BenchError> {
    let payload = VariantConfig::vrpd_11(1).drone_payload;
    let text = std::fs::read_to_string(path)?;
    let mut coords = Vec::new();
    let mut demands = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<&str> = line.split_whitespace().collect();
        let want = if coords.is_empty() { 2 } else { 3 };
        if nums.len() != want {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected {} fields, got '{}'", want, line),
            ));
        }
        let mut parsed = Vec::with_capacity(nums.len());
        for tok in &nums {
            parsed.push(
                tok.parse::<f64>()
                    .map_err(|_| parse_err(path, idx + 1, format!("bad number '{}'", tok)))?,
            );
        }
        coords.push((parsed[0], parsed[1]));
        if parsed.len() == 3 {
            demands.push(parsed[2]);
        }
    }
    if coords.len() < 2 {
        return Err(BenchError::EmptyInstance);
    }
    Instance::from_coords(&stem_of(path), &coords, Some(&demands), payload, "set6")
        .map_err(BenchError::from)
}

/// Inverse of `load_sacramento`, for golden-file fixtures.
pub fn write_sacramento(instance: &Instance, path: &Path) -> Result<(), BenchError> {
    let mut out = String::new();
    writeln!(out, "{} {}", instance.depot.x, instance.depot.y).unwrap();
    for c in &instance.customers {
        let loc = instance.location(c.location);
        writeln!(out, "{} {} {}", loc.x, loc.y, c.demand.unwrap_or(0.0)).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Directory with `nodes.csv` (id,x,y,truck-only flag; depot first, with the
/// customary duplicate depot row last) plus explicit travel-time matrices
/// `tau.csv` (truck) and `tauprime.csv` (drone). The duplicate depot row and
/// matrix slot are folded back onto location 0.
pub fn load_murray(
    dir: &Path,
    config: &VariantConfig,
    scale: i64,
) -> Result<(Instance, DistanceModel), BenchError> {
    let nodes_path = dir.join("nodes.csv");
    let text = std::fs::read_to_string(&nodes_path)?;
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut truck_only: Vec<bool> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 3 {
            return Err(parse_err(&nodes_path, idx + 1, format!("expected id,x,y[,flag]: '{}'", line)));
        }
        let x = cells[1]
            .parse()
            .map_err(|_| parse_err(&nodes_path, idx + 1, format!("bad x '{}'", cells[1])))?;
        let y = cells[2]
            .parse()
            .map_err(|_| parse_err(&nodes_path, idx + 1, format!("bad y '{}'", cells[2])))?;
        let flag = cells.get(3).map_or(Ok(0.0), |c| {
            c.parse::<f64>()
                .map_err(|_| parse_err(&nodes_path, idx + 1, format!("bad flag '{}'", c)))
        })?;
        coords.push((x, y));
        truck_only.push(flag != 0.0);
    }
    if coords.len() < 3 {
        return Err(BenchError::EmptyInstance);
    }
    // Fold the trailing return-depot row.
    let folded = *coords.last().unwrap() == coords[0];
    let rows = coords.len();
    let n = if folded { rows - 2 } else { rows - 1 };
    if n == 0 {
        return Err(BenchError::EmptyInstance);
    }
    coords.truncate(n + 1);

    let matrix = |file: &str| -> Result<Vec<Vec<f64>>, BenchError> {
        let p = dir.join(file);
        let text = std::fs::read_to_string(&p)?;
        let mut m = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for cell in line.split(',') {
                row.push(cell.trim().parse::<f64>().map_err(|_| {
                    parse_err(&p, idx + 1, format!("bad matrix cell '{}'", cell.trim()))
                })?);
            }
            m.push(row);
        }
        if m.len() != rows || m.iter().any(|r| r.len() != rows) {
            return Err(parse_err(&p, 0, format!("matrix must be {0}x{0}", rows)));
        }
        // Collapse the duplicate depot index: returns to the end depot
        // become returns to location 0.
        let mut out = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                out[i][j] = if folded && j == 0 && i != 0 { m[i][rows - 1] } else { m[i][j] };
            }
        }
        Ok(out)
    };
    let tau = matrix("tau.csv")?;
    let tauprime = matrix("tauprime.csv")?;

    let mut instance =
        Instance::from_coords(&stem_of(dir), &coords, None, f64::INFINITY, "set1")?;
    for (c, flag) in truck_only.iter().skip(1).take(n).enumerate() {
        instance.customers[c].drone_eligible = !flag;
    }
    let dm = DistanceModel::from_travel_times(tau, tauprime, config, scale)?;
    Ok((instance, dm))
}

/// Rebuild an instance and distance model from a solver-format candidate
/// graph alone. Travel times come straight from the file's matrices, so
/// scaled schedules recompute exactly; coordinates are unknown (all zero)
/// and demands are unavailable — eligibility is whatever the candidate sets
/// encode, and weight limits cannot be re-checked.
pub fn instance_from_graph(
    graph: &CandidateGraph,
    config: &VariantConfig,
    scale: i64,
) -> Result<(Instance, DistanceModel), BenchError> {
    let max_loc = graph.nodes.iter().map(|nd| nd.physical_loc).max().unwrap_or(0);
    let mut rep = vec![usize::MAX; max_loc + 1];
    for nd in &graph.nodes {
        rep[nd.physical_loc] = nd.node_id;
    }
    let covered = rep.iter().filter(|&&r| r != usize::MAX).count();
    if covered != max_loc + 1 {
        return Err(BenchError::IncompleteGraph { covered, max: max_loc });
    }
    let size = max_loc + 1;
    let s = scale as f64;
    let mut truck_time = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in 0..size {
            truck_time[i][j] = graph.distance(rep[i], rep[j]) as f64 / s;
        }
    }
    // Drone times: exact where the file states them (every candidate copy
    // pairs its location with its customer); elsewhere estimated from truck
    // times and the speed ratio, which only matters for legs no decoded
    // sortie can use.
    let ratio = config.truck_speed / config.drone_speed;
    let mut drone_time: Vec<Vec<f64>> =
        truck_time.iter().map(|r| r.iter().map(|t| t * ratio).collect()).collect();
    for nd in &graph.nodes {
        if nd.color_id == 0 {
            continue;
        }
        let cust = graph
            .customer_self(nd.color_id)
            .map(|sn| sn.physical_loc)
            .unwrap_or(nd.physical_loc);
        let t = graph.service_times[nd.node_id] as f64 / s;
        drone_time[nd.physical_loc][cust] = t;
        drone_time[cust][nd.physical_loc] = t;
    }

    let locations: Vec<Location> =
        (0..size).map(|id| Location { id, x: 0.0, y: 0.0 }).collect();
    let customers: Vec<Customer> = (1..=graph.colors)
        .map(|c| Customer {
            location: graph.customer_self(c).map(|nd| nd.physical_loc).unwrap_or(c),
            demand: None,
            drone_eligible: graph.color_set(c).len() > 1,
        })
        .collect();
    if customers.is_empty() {
        return Err(BenchError::EmptyInstance);
    }
    let instance = Instance {
        name: graph.name.clone(),
        depot: locations[0],
        customers,
        locations,
        area_tag: "reconstructed".to_string(),
    };
    let dm = DistanceModel::from_travel_times(truck_time, drone_time, config, scale)?;
    Ok((instance, dm))
}

/// Outcome of re-checking a written tour against its own problem file.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub instance: String,
    /// Objective parsed from the tour file's name.
    pub embedded_objective: f64,
    /// Objective recomputed from a fresh decode + evaluation.
    pub recomputed_objective: f64,
    pub violations: ViolationCounts,
    pub feasible: bool,
    pub pass: bool,
    /// Human-readable failure descriptions; empty on pass.
    pub messages: Vec<String>,
}

/// Re-parse, re-decode and re-evaluate a written tour, comparing against the
/// objective embedded in its filename.
pub fn validate(
    outtour: &Path,
    drone: &Path,
    config: &VariantConfig,
) -> Result<ClosureReport, BenchError> {
    validate_scaled(outtour, drone, config, 10)
}

pub fn validate_scaled(
    outtour: &Path,
    drone: &Path,
    config: &VariantConfig,
    scale: i64,
) -> Result<ClosureReport, BenchError> {
    let graph = candgen::parse_drone_file(drone)?;
    let mut cfg = config.clone();
    if let Some(v) = graph.vehicles {
        cfg.truck_count = v;
    }
    if let Some(m) = graph.capacity {
        cfg.drone_count = m;
    }
    cfg.validate().map_err(|e| BenchError::ConfigMismatch(e.to_string()))?;

    let stem = stem_of(outtour);
    let embedded: f64 = stem
        .split('_')
        .next()
        .and_then(|tok| tok.parse().ok())
        .ok_or_else(|| BenchError::BadStem(stem.clone()))?;

    let order = candgen::parse_outtour(outtour)?;
    let (instance, dm) = instance_from_graph(&graph, &cfg, scale)?;
    let sol = evaluate_tour(&GiantTour { order }, &graph, &instance, &dm, &cfg);

    let recomputed = sol.report.soft_objective;
    let tol = match cfg.objective {
        // One decimal in the filename: half a print quantum.
        Objective::Makespan => 0.05 + 1e-9,
        // Costs re-derive distance terms from scaled times; allow the same
        // slack the published pipeline itself exhibits.
        Objective::Cost => (0.005 * embedded.abs()).max(1e-4),
    };
    let feasible = sol.report.is_feasible();
    let mut messages = Vec::new();
    for (count, what) in violation_names(&sol.report.counts) {
        messages.push(format!("{} {} violation(s)", count, what));
    }
    if (recomputed - embedded).abs() > tol {
        messages.push(format!(
            "objective mismatch: file says {}, recomputation says {:.5}",
            embedded, recomputed
        ));
    }
    let pass = messages.is_empty();
    Ok(ClosureReport {
        instance: graph.name.clone(),
        embedded_objective: embedded,
        recomputed_objective: recomputed,
        violations: sol.report.counts.clone(),
        feasible,
        pass,
        messages,
    })
}

fn violation_names(counts: &ViolationCounts) -> Vec<(u32, &'static str)> {
    [
        (counts.unserved_customer, "unserved customer"),
        (counts.double_service, "double service"),
        (counts.ineligible_drone_customer, "ineligible drone customer"),
        (counts.loop_sortie, "loop sortie"),
        (counts.revisit, "revisit"),
        (counts.drone_concurrency, "drone concurrency"),
        (counts.endurance, "endurance"),
        (counts.payload, "payload"),
        (counts.truck_capacity, "truck capacity"),
        (counts.route_duration, "route duration"),
        (counts.malformed_sortie, "malformed sortie"),
    ]
    .into_iter()
    .filter(|&(c, _)| c > 0)
    .collect()
}

const SORTIE_PALETTE: [&str; 7] =
    ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"];

/// Draw a solution: depot as a square, customers as circles, one solid
/// polyline per truck route, each sortie as a dashed two-leg polyline
/// colored by its airborne slot. Output is deterministic.
pub fn render_svg(
    solution: &StructuredSolution,
    instance: &Instance,
    path: &Path,
) -> Result<(), BenchError> {
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for loc in &instance.locations {
        min_x = min_x.min(loc.x);
        max_x = max_x.max(loc.x);
        min_y = min_y.min(loc.y);
        max_y = max_y.max(loc.y);
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let side = 560.0;
    let margin = 20.0;
    let px = |x: f64| margin + (x - min_x) / span_x * side;
    // SVG y grows downward; flip so north stays up.
    let py = |y: f64| margin + (max_y - y) / span_y * side;
    let point = |loc: usize| {
        let l = instance.location(loc);
        (px(l.x), py(l.y))
    };

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"600\" height=\"600\" fill=\"white\"/>").unwrap();

    for route in &solution.routes {
        if route.len() < 2 {
            continue;
        }
        let pts: Vec<String> = route
            .iter()
            .map(|&loc| {
                let (x, y) = point(loc);
                format!("{:.2},{:.2}", x, y)
            })
            .collect();
        writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        )
        .unwrap();
    }

    for (r, sorties) in solution.sorties.iter().enumerate() {
        for (si, s) in sorties.iter().enumerate() {
            // Airborne slot: how many earlier sorties are still out when
            // this one launches. Five concurrent drones -> five colors.
            let depth = sorties[..si]
                .iter()
                .filter(|p| p.retrieval_stop > s.launch_stop)
                .count();
            let color = SORTIE_PALETTE[depth % SORTIE_PALETTE.len()];
            let (lx, ly) = point(solution.launch_loc(r, s));
            let (cx, cy) = point(instance.customers[s.customer - 1].location);
            let (rx, ry) = point(solution.retrieval_loc(r, s));
            writeln!(
                svg,
                "<polyline points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"none\" \
                 stroke=\"{}\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>",
                lx, ly, cx, cy, rx, ry, color
            )
            .unwrap();
        }
    }

    for c in &instance.customers {
        let (x, y) = point(c.location);
        writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"white\" stroke=\"black\"/>",
            x, y
        )
        .unwrap();
    }
    let (dx, dy) = point(0);
    writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"black\"/>",
        dx - 4.0,
        dy - 4.0
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    std::fs::write(path, svg)?;
    Ok(())
}

/// Infer the variant a solver-format file describes from its fleet sections.
pub fn infer_config(graph: &CandidateGraph) -> VariantConfig {
    match (graph.vehicles, graph.capacity) {
        (Some(v), Some(m)) if m > 1 => VariantConfig::vrpd_1m(v, m),
        (Some(v), _) => VariantConfig::vrpd_11(v),
        (None, Some(m)) => VariantConfig::tsp_md(m),
        (None, None) => VariantConfig::fstsp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candgen::expand_candidates;
    use crate::model::build_distance_model;
    use crate::plangen::{random_instance, rng_from_seed};
    use crate::search::{default_k, solve, SearchSettings};

    fn roundish(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn gap_sign_convention_matches_published_rows() {
        assert_eq!(roundish(gap_percent(121.4, 123.0)), -1.32);
        assert_eq!(roundish(gap_percent(110.1, 117.4)), -6.63);
        assert_eq!(gap_percent(114.6, 114.6), 0.0);
    }

    #[test]
    fn poikonen_round_trips() {
        let mut rng = rng_from_seed(5);
        let instance = random_instance(&mut rng, 6, "p");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        write_poikonen(&instance, &path).unwrap();
        let back = load_poikonen(&path).unwrap();
        assert_eq!(back.customer_count(), 6);
        assert!(back.customers.iter().all(|c| c.drone_eligible && c.demand.is_none()));
        for (a, b) in instance.locations.iter().zip(&back.locations) {
            assert_eq!((a.x, a.y), (b.x, b.y));
        }
    }

    #[test]
    fn poikonen_rejects_malformed_line_with_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "0 0\n5 5\nnot numbers here\n").unwrap();
        match load_poikonen(&path) {
            Err(BenchError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {:?}", other.map(|i| i.name)),
        }
    }

    #[test]
    fn sacramento_eligibility_follows_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("6.2.9.txt");
        std::fs::write(&path, "0 0\n1 1 2.5\n2 2 8.0\n").unwrap();
        let inst = load_sacramento(&path).unwrap();
        assert_eq!(inst.name, "6.2.9");
        assert!(inst.customers[0].drone_eligible);
        assert!(!inst.customers[1].drone_eligible, "8 kg exceeds the 5 kg payload");
        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "0 0\n").unwrap();
        assert!(matches!(load_sacramento(&empty), Err(BenchError::EmptyInstance)));
    }

    #[test]
    fn murray_folds_duplicate_depot_and_flags_truck_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("nodes.csv"),
            "0,0,0,0\n1,3,4,0\n2,6,0,1\n3,0,0,0\n",
        )
        .unwrap();
        // 4x4 time matrices; last row/column belong to the return depot.
        std::fs::write(
            dir.path().join("tau.csv"),
            "0,10,20,0\n10,0,15,12\n20,15,0,21\n0,12,21,0\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("tauprime.csv"),
            "0,5,10,0\n5,0,7,6\n10,7,0,11\n0,6,11,0\n",
        )
        .unwrap();
        let cfg = VariantConfig::fstsp_murray(20.0);
        let (inst, dm) = load_murray(dir.path(), &cfg, 10).unwrap();
        assert_eq!(inst.customer_count(), 2);
        assert!(inst.customers[0].drone_eligible);
        assert!(!inst.customers[1].drone_eligible);
        // Return legs read the folded end-depot column.
        assert_eq!(dm.truck_time(1, 0), 12.0);
        assert_eq!(dm.truck_time(2, 0), 21.0);
        assert_eq!(dm.truck_time(0, 1), 10.0);
        assert_eq!(dm.drone_time(1, 0), 6.0);
    }

    #[test]
    fn murray_rejects_missing_matrix() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("nodes.csv"), "0,0,0,0\n1,3,4,0\n2,0,0,0\n").unwrap();
        assert!(load_murray(dir.path(), &VariantConfig::fstsp_murray(20.0), 10).is_err());
    }

    #[test]
    fn reconstruction_preserves_scaled_times() {
        let cfg = VariantConfig::fstsp();
        let mut rng = rng_from_seed(11);
        let instance = random_instance(&mut rng, 6, "r");
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let graph = expand_candidates(&instance, &dm, &cfg, default_k(&instance)).unwrap();
        let (back, dm2) = instance_from_graph(&graph, &cfg, 10).unwrap();
        assert_eq!(back.customer_count(), instance.customer_count());
        for i in 0..instance.locations.len() {
            for j in 0..instance.locations.len() {
                assert_eq!(dm2.truck_time_scaled(i, j), dm.truck_time_scaled(i, j));
            }
        }
        // Drone legs stated in the file are exact.
        for nd in &graph.nodes {
            if nd.color_id > 0 {
                let cust = instance.customers[nd.color_id - 1].location;
                assert_eq!(
                    dm2.drone_time_scaled(nd.physical_loc, cust),
                    dm.drone_time_scaled(nd.physical_loc, cust)
                );
            }
        }
    }

    fn solved_files(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, VariantConfig) {
        let cfg = VariantConfig::fstsp();
        let mut rng = rng_from_seed(23);
        let instance = random_instance(&mut rng, 5, "vtest");
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let graph = expand_candidates(&instance, &dm, &cfg, default_k(&instance)).unwrap();
        let settings = SearchSettings { max_iterations: Some(30_000), time_limit: 1e9, ..Default::default() };
        let result = solve(&graph, &instance, &dm, &cfg, &settings).unwrap();
        let drone_path = dir.join("vtest.drone");
        candgen::write_drone_file(&graph, &drone_path).unwrap();
        let tour_path = candgen::write_outtour(
            &result.best_tour.order,
            result.best_penalty.soft_objective,
            false,
            &instance.name,
            dir,
        )
        .unwrap();
        (tour_path, drone_path, cfg)
    }

    #[test]
    fn validate_passes_fresh_solution() {
        let dir = tempfile::tempdir().unwrap();
        let (tour, drone, cfg) = solved_files(dir.path());
        let report = validate(&tour, &drone, &cfg).unwrap();
        assert!(report.pass, "{:?}", report.messages);
        assert!(report.feasible);
        assert!((report.recomputed_objective - report.embedded_objective).abs() <= 0.05 + 1e-9);
    }

    #[test]
    fn validate_names_the_broken_constraint() {
        let dir = tempfile::tempdir().unwrap();
        let (tour, drone, cfg) = solved_files(dir.path());
        // Drop a customer-self line from the tour: that customer goes unserved.
        let graph = candgen::parse_drone_file(&drone).unwrap();
        let order = candgen::parse_outtour(&tour).unwrap();
        let keep: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&id| graph.customer_self(1).map(|nd| nd.node_id) != Some(id))
            .collect();
        let mut text = String::new();
        for id in &keep {
            text.push_str(&format!("{}\n", id + 1));
        }
        text.push_str("-1\n");
        std::fs::write(&tour, text).unwrap();
        let report = validate(&tour, &drone, &cfg).unwrap();
        assert!(!report.pass);
        assert!(report.messages.iter().any(|m| m.contains("unserved customer")), "{:?}", report.messages);
    }

    #[test]
    fn validate_rejects_wrong_objective_stem() {
        let dir = tempfile::tempdir().unwrap();
        let (tour, drone, cfg) = solved_files(dir.path());
        let lied = dir.path().join("999_vtest.outtour");
        std::fs::rename(&tour, &lied).unwrap();
        let report = validate(&lied, &drone, &cfg).unwrap();
        assert!(!report.pass);
        assert!(report.messages.iter().any(|m| m.contains("objective mismatch")), "{:?}", report.messages);
    }

    #[test]
    fn svg_is_deterministic_and_reflects_sorties() {
        let cfg = VariantConfig::tsp_md(3);
        let mut rng = rng_from_seed(31);
        let instance = random_instance(&mut rng, 8, "svg");
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let graph = expand_candidates(&instance, &dm, &cfg, default_k(&instance)).unwrap();
        let settings = SearchSettings { max_iterations: Some(20_000), time_limit: 1e9, ..Default::default() };
        let result = solve(&graph, &instance, &dm, &cfg, &settings).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        render_svg(&result.best_solution, &instance, &a).unwrap();
        render_svg(&result.best_solution, &instance, &b).unwrap();
        let sa = std::fs::read(&a).unwrap();
        assert_eq!(sa, std::fs::read(&b).unwrap(), "renders must be byte-identical");
        let text = String::from_utf8(sa).unwrap();
        if result.best_solution.drone_served_count() > 0 {
            assert!(text.contains("stroke-dasharray"));
        }
        assert!(text.contains("<rect"));
        assert!(text.contains("<circle"));
    }

    #[test]
    fn svg_without_sorties_has_no_dashes() {
        let mut rng = rng_from_seed(37);
        let instance = random_instance(&mut rng, 4, "plain");
        let mut sol = StructuredSolution::empty(4);
        sol.routes = vec![vec![0, 1, 2, 3, 4, 0]];
        sol.sorties = vec![Vec::new()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.svg");
        render_svg(&sol, &instance, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("stroke-dasharray"));
        assert_eq!(text.matches("<polyline").count(), 1);
    }

    #[test]
    fn reference_table_and_gap_rows() {
        let csv = "instance,z_star,dcus\npoi-7-1,114.6,2\npoi-7-2,91.6,2\npoi-7-23,129.8,-\n";
        let table = ReferenceTable::parse(csv, Path::new("ref.csv")).unwrap();
        assert_eq!(table.get("poi-7-1", "z_star"), Some(114.6));
        assert_eq!(table.get("poi-7-23", "dcus"), None);
        let rec = |name: &str, obj: f64| BenchmarkRecord {
            instance: name.to_string(),
            variant: Variant::Fstsp,
            objective: obj,
            feasible: true,
            dcus: 2,
            drones: 1,
            routes: 1,
            iteration_found: 1,
            wall_time: 0.1,
            gaps: Vec::new(),
        };
        let out = gap_table(&[rec("poi-7-1", 114.6), rec("poi-7-2", 91.6)], &table, "z_star");
        assert!(out.ends_with("average,,,0.00\n"), "{}", out);
        assert_eq!(out.lines().count(), 4);
    }
}
