//! Phase 1: expand an instance into the colored candidate graph
//! ("flat points") and read/write the `.drone`, `.par` and `.outtour`
//! interchange files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{DistanceModel, Instance, LocationId, ScaledTime, Variant, VariantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Depot,
    CustomerSelf,
    CandidateCopy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateNode {
    pub node_id: usize,
    /// 0 = depot, 1..=n = customer colors.
    pub color_id: usize,
    pub physical_loc: LocationId,
    pub role: NodeRole,
}

/// The Phase-1 expansion: every drone-eligible customer becomes a colored set
/// of k nodes (itself plus the k-1 nearest pool locations usable as
/// launch/retrieval markers); truck-only customers stay singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    pub name: String,
    pub nodes: Vec<CandidateNode>,
    pub k: usize,
    /// Scaled integer truck travel times between node locations, row-major;
    /// together with the service times this makes the file self-contained
    /// for re-evaluation.
    pub distances: Vec<i64>,
    /// Per node: scaled drone travel time from the node's location to its
    /// color's customer. 0 for depot-role nodes and customerSelf nodes.
    pub service_times: Vec<ScaledTime>,
    /// CAPACITY line: drones per truck. Absent for FSTSP files.
    pub capacity: Option<usize>,
    /// VEHICLES line: truck count. VRP-D only.
    pub vehicles: Option<usize>,
    /// Number of customer colors n.
    pub colors: usize,
}

impl CandidateGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> i64 {
        self.distances[a * self.nodes.len() + b]
    }

    /// Effective drone count for decoding/evaluation.
    pub fn drone_count(&self) -> usize {
        self.capacity.unwrap_or(1)
    }

    /// Effective truck count.
    pub fn truck_count(&self) -> usize {
        self.vehicles.unwrap_or(1)
    }

    /// The customerSelf node of a color.
    pub fn customer_self(&self, color: usize) -> Option<&CandidateNode> {
        self.nodes
            .iter()
            .find(|nd| nd.color_id == color && nd.role == NodeRole::CustomerSelf)
    }

    /// Nodes of one color, in graph order.
    pub fn color_set(&self, color: usize) -> Vec<&CandidateNode> {
        self.nodes.iter().filter(|nd| nd.color_id == color).collect()
    }
}

#[derive(Debug, Error)]
pub enum CandgenError {
    #[error("k = {k} out of range: pool for customer {customer} admits 2..={max}")]
    BadK { k: usize, customer: usize, max: usize },
    #[error("instance has no customers")]
    EmptyInstance,
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("missing required key {0}")]
    MissingKey(&'static str),
    #[error("solution is empty; nothing to write")]
    EmptySolution,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CandgenError {
    CandgenError::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

/// Build the candidate graph. The pool for customer c is every other
/// customer's location plus the depot plus any waypoint locations; ties in
/// nearest-neighbor distance break by ascending location id.
pub fn expand_candidates(
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
    k: usize,
) -> Result<CandidateGraph, CandgenError> {
    let n = instance.customer_count();
    if n == 0 {
        return Err(CandgenError::EmptyInstance);
    }
    // Pool locations usable as launch/retrieval points: depot, customers,
    // and (when enabled) waypoints already present in the location table.
    let pool_base: Vec<LocationId> = instance
        .locations
        .iter()
        .map(|l| l.id)
        .filter(|&id| id == 0 || instance.customer_at(id).is_some() || config.non_customer_lr)
        .collect();

    let mut nodes = Vec::new();
    nodes.push(CandidateNode { node_id: 0, color_id: 0, physical_loc: 0, role: NodeRole::Depot });
    // Multi-truck route separators are virtual tour nodes (ids beyond the
    // graph), so the file keeps the 1 + Σ setSize node count.
    let vehicles = match config.variant {
        Variant::Vrpd11 | Variant::Vrpd1M => Some(config.truck_count),
        _ => None,
    };

    for (ci, cust) in instance.customers.iter().enumerate() {
        let color = ci + 1;
        let self_id = nodes.len();
        nodes.push(CandidateNode {
            node_id: self_id,
            color_id: color,
            physical_loc: cust.location,
            role: NodeRole::CustomerSelf,
        });
        if !cust.drone_eligible {
            continue;
        }
        let mut pool: Vec<LocationId> =
            pool_base.iter().copied().filter(|&id| id != cust.location).collect();
        if k < 2 || k > pool.len() + 1 {
            return Err(CandgenError::BadK { k, customer: color, max: pool.len() + 1 });
        }
        pool.sort_by(|&a, &b| {
            dm.drone_dist(a, cust.location)
                .partial_cmp(&dm.drone_dist(b, cust.location))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &loc in pool.iter().take(k - 1) {
            let id = nodes.len();
            nodes.push(CandidateNode {
                node_id: id,
                color_id: color,
                physical_loc: loc,
                role: NodeRole::CandidateCopy,
            });
        }
    }

    let size = nodes.len();
    let mut distances = vec![0i64; size * size];
    for a in 0..size {
        for b in 0..size {
            distances[a * size + b] = dm.truck_time_scaled(nodes[a].physical_loc, nodes[b].physical_loc);
        }
    }
    let service_times = nodes
        .iter()
        .map(|nd| {
            if nd.color_id == 0 {
                0
            } else {
                let cust_loc = instance.customers[nd.color_id - 1].location;
                dm.drone_time_scaled(nd.physical_loc, cust_loc)
            }
        })
        .collect();

    let capacity = match config.variant {
        Variant::Fstsp => None,
        _ => Some(config.drone_count),
    };

    Ok(CandidateGraph {
        name: instance.name.clone(),
        nodes,
        k,
        distances,
        service_times,
        capacity,
        vehicles,
        colors: n,
    })
}

/// Serialize a graph in the TSPLIB-style `.drone` layout. Node ids are
/// 1-based in the file; all values are integers; LF line endings.
pub fn drone_file_contents(graph: &CandidateGraph) -> Result<String, CandgenError> {
    if graph.colors == 0 || graph.nodes.is_empty() {
        return Err(CandgenError::EmptyInstance);
    }
    let n = graph.nodes.len();
    let mut out = String::new();
    writeln!(out, "DIMENSION: {}", n).unwrap();
    if let Some(m) = graph.capacity {
        writeln!(out, "CAPACITY: {}", m).unwrap();
    }
    if let Some(v) = graph.vehicles {
        writeln!(out, "VEHICLES: {}", v).unwrap();
    }
    out.push_str("EDGE_WEIGHT_SECTION\n");
    for a in 0..n {
        let row: Vec<String> = (0..n).map(|b| graph.distance(a, b).to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out.push_str("CTSP_SET_SECTION\n");
    for color in 0..=graph.colors {
        let ids: Vec<String> = graph
            .nodes
            .iter()
            .filter(|nd| nd.color_id == color)
            .map(|nd| (nd.node_id + 1).to_string())
            .collect();
        writeln!(out, "{} {} -1", color, ids.join(" ")).unwrap();
    }
    out.push_str("SERVICE_TIME_SECTION\n");
    for nd in &graph.nodes {
        writeln!(out, "{} {}", nd.node_id + 1, graph.service_times[nd.node_id]).unwrap();
    }
    out.push_str("DRAFT_LIMIT_SECTION\n");
    for nd in &graph.nodes {
        writeln!(out, "{} {}", nd.node_id + 1, nd.physical_loc).unwrap();
    }
    out.push_str("EOF\n");
    Ok(out)
}

pub fn write_drone_file(graph: &CandidateGraph, path: &Path) -> Result<(), CandgenError> {
    std::fs::write(path, drone_file_contents(graph)?)?;
    Ok(())
}

pub fn parse_drone_file(path: &Path) -> Result<CandidateGraph, CandgenError> {
    let text = std::fs::read_to_string(path)?;
    parse_drone_contents(&text, path)
}

pub fn parse_drone_contents(text: &str, path: &Path) -> Result<CandidateGraph, CandgenError> {
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<usize> = None;
    let mut vehicles: Option<usize> = None;
    let mut distances: Vec<i64> = Vec::new();
    // color -> 0-based node ids
    let mut sets: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut service: Vec<Option<i64>> = Vec::new();
    let mut draft: Vec<Option<i64>> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Header,
        EdgeWeights,
        Sets,
        Service,
        Draft,
        Done,
    }
    let mut section = Section::Header;

    let int = |tok: &str, ln: usize| -> Result<i64, CandgenError> {
        tok.parse::<i64>().map_err(|_| parse_err(path, ln, format!("non-integer token '{}'", tok)))
    };

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "EDGE_WEIGHT_SECTION" => {
                section = Section::EdgeWeights;
                continue;
            }
            "CTSP_SET_SECTION" => {
                section = Section::Sets;
                continue;
            }
            "SERVICE_TIME_SECTION" => {
                section = Section::Service;
                continue;
            }
            "DRAFT_LIMIT_SECTION" => {
                section = Section::Draft;
                continue;
            }
            "EOF" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let (key, value) = line
                    .split_once(':')
                    .ok_or_else(|| parse_err(path, ln, format!("unknown keyword '{}'", line)))?;
                let value = value.trim();
                match key.trim() {
                    "DIMENSION" => dimension = Some(int(value, ln)? as usize),
                    "CAPACITY" => capacity = Some(int(value, ln)? as usize),
                    "VEHICLES" => vehicles = Some(int(value, ln)? as usize),
                    other => return Err(parse_err(path, ln, format!("unknown keyword '{}'", other))),
                }
            }
            Section::EdgeWeights => {
                for tok in line.split_whitespace() {
                    distances.push(int(tok, ln)?);
                }
            }
            Section::Sets => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < 2 || *toks.last().unwrap() != "-1" {
                    return Err(parse_err(path, ln, "set line must be 'color ids... -1'"));
                }
                let color = int(toks[0], ln)? as usize;
                let mut ids = Vec::new();
                for tok in &toks[1..toks.len() - 1] {
                    let id = int(tok, ln)?;
                    if id < 1 {
                        return Err(parse_err(path, ln, format!("node id {} out of range", id)));
                    }
                    ids.push(id as usize - 1);
                }
                sets.push((color, ids));
            }
            Section::Service | Section::Draft => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(parse_err(path, ln, "expected 'nodeid value'"));
                }
                let id = int(toks[0], ln)? as usize;
                let value = int(toks[1], ln)?;
                let store = if section == Section::Service { &mut service } else { &mut draft };
                if id == 0 || id > store.len() + 1024 * 1024 {
                    return Err(parse_err(path, ln, format!("node id {} out of range", id)));
                }
                if store.len() < id {
                    store.resize(id, None);
                }
                store[id - 1] = Some(value);
            }
            Section::Done => {
                return Err(parse_err(path, ln, "content after EOF"));
            }
        }
    }

    let dim = dimension.ok_or(CandgenError::MissingKey("DIMENSION"))?;
    if distances.len() != dim * dim {
        return Err(parse_err(
            path,
            0,
            format!("EDGE_WEIGHT_SECTION holds {} values, expected {}", distances.len(), dim * dim),
        ));
    }
    if service.len() != dim || service.iter().any(Option::is_none) {
        return Err(parse_err(path, 0, "SERVICE_TIME_SECTION incomplete"));
    }
    if draft.len() != dim || draft.iter().any(Option::is_none) {
        return Err(parse_err(path, 0, "DRAFT_LIMIT_SECTION incomplete"));
    }
    let service: Vec<i64> = service.into_iter().map(Option::unwrap).collect();
    let draft: Vec<i64> = draft.into_iter().map(Option::unwrap).collect();

    // Reconstruct nodes: color from the sets, role from color/service time.
    let mut color_of: Vec<Option<usize>> = vec![None; dim];
    let mut colors = 0usize;
    for (color, ids) in &sets {
        colors = colors.max(*color);
        for &id in ids {
            if id >= dim {
                return Err(parse_err(path, 0, format!("set node id {} exceeds DIMENSION", id + 1)));
            }
            color_of[id] = Some(*color);
        }
    }
    let mut nodes = Vec::with_capacity(dim);
    let mut k = 1usize;
    for id in 0..dim {
        let color = color_of[id]
            .ok_or_else(|| parse_err(path, 0, format!("node {} missing from CTSP_SET_SECTION", id + 1)))?;
        let role = if color == 0 {
            NodeRole::Depot
        } else if service[id] == 0 {
            NodeRole::CustomerSelf
        } else {
            NodeRole::CandidateCopy
        };
        nodes.push(CandidateNode { node_id: id, color_id: color, physical_loc: draft[id] as usize, role });
    }
    for color in 1..=colors {
        let selves = nodes
            .iter()
            .filter(|nd| nd.color_id == color && nd.role == NodeRole::CustomerSelf)
            .count();
        if selves != 1 {
            return Err(parse_err(
                path,
                0,
                format!("color {} has {} customerSelf nodes, expected exactly 1", color, selves),
            ));
        }
        k = k.max(nodes.iter().filter(|nd| nd.color_id == color).count());
    }
    if colors == 0 {
        return Err(parse_err(path, 0, "file declares no customer colors"));
    }

    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(CandidateGraph {
        name,
        nodes,
        k,
        distances,
        service_times: service,
        capacity,
        vehicles,
        colors,
    })
}

/// Solver settings as carried by a `.par` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParSettings {
    pub problem_file: PathBuf,
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
    pub output_tour_file: Option<PathBuf>,
    /// 1 = no revisit, 2 = revisit allowed.
    pub config: Option<u8>,
    pub runs: Option<u32>,
    /// Unknown keys, preserved on round-trip.
    pub unknown: Vec<(String, String)>,
}

impl ParSettings {
    pub fn new(problem_file: impl Into<PathBuf>) -> Self {
        ParSettings {
            problem_file: problem_file.into(),
            time_limit: None,
            seed: None,
            output_tour_file: None,
            config: None,
            runs: None,
            unknown: Vec::new(),
        }
    }
}

pub fn par_file_contents(settings: &ParSettings) -> String {
    let mut out = String::new();
    writeln!(out, "PROBLEM_FILE: {}", settings.problem_file.display()).unwrap();
    if let Some(t) = settings.time_limit {
        if t == t.trunc() {
            writeln!(out, "TIME_LIMIT: {}", t as i64).unwrap();
        } else {
            writeln!(out, "TIME_LIMIT: {}", t).unwrap();
        }
    }
    if let Some(s) = settings.seed {
        writeln!(out, "SEED: {}", s).unwrap();
    }
    if let Some(p) = &settings.output_tour_file {
        writeln!(out, "OUTPUT_TOUR_FILE: {}", p.display()).unwrap();
    }
    if let Some(c) = settings.config {
        writeln!(out, "CONFIG: {}", c).unwrap();
    }
    if let Some(r) = settings.runs {
        writeln!(out, "RUNS: {}", r).unwrap();
    }
    for (k, v) in &settings.unknown {
        writeln!(out, "{}: {}", k, v).unwrap();
    }
    out
}

pub fn write_par_file(settings: &ParSettings, path: &Path) -> Result<(), CandgenError> {
    std::fs::write(path, par_file_contents(settings))?;
    Ok(())
}

/// Parse a `.par` file. Duplicate keys: the last occurrence wins and a warning
/// is emitted; unknown keys are preserved with a warning.
pub fn parse_par_file(path: &Path) -> Result<(ParSettings, Vec<String>), CandgenError> {
    let text = std::fs::read_to_string(path)?;
    parse_par_contents(&text, path)
}

pub fn parse_par_contents(text: &str, path: &Path) -> Result<(ParSettings, Vec<String>), CandgenError> {
    let mut problem_file: Option<PathBuf> = None;
    let mut settings = ParSettings::new("");
    let mut warnings = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| parse_err(path, ln, format!("expected 'KEY: value', got '{}'", line)))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if seen.contains(&key) {
            warnings.push(format!("line {}: duplicate key {} — last occurrence wins", ln, key));
        } else {
            seen.push(key.clone());
        }
        let num = |v: &str| -> Result<f64, CandgenError> {
            v.parse::<f64>().map_err(|_| parse_err(path, ln, format!("non-numeric value '{}'", v)))
        };
        match key.as_str() {
            "PROBLEM_FILE" => problem_file = Some(PathBuf::from(&value)),
            "TIME_LIMIT" => settings.time_limit = Some(num(&value)?),
            "SEED" => settings.seed = Some(num(&value)? as u64),
            "OUTPUT_TOUR_FILE" => settings.output_tour_file = Some(PathBuf::from(&value)),
            "CONFIG" => {
                let c = num(&value)? as u8;
                if c != 1 && c != 2 {
                    return Err(parse_err(path, ln, format!("CONFIG must be 1 or 2, got {}", c)));
                }
                settings.config = Some(c);
            }
            "RUNS" => settings.runs = Some(num(&value)? as u32),
            _ => {
                warnings.push(format!("line {}: unknown key {} preserved verbatim", ln, key));
                settings.unknown.retain(|(k, _)| k != &key);
                settings.unknown.push((key, value));
            }
        }
    }
    settings.problem_file = problem_file.ok_or(CandgenError::MissingKey("PROBLEM_FILE"))?;
    Ok((settings, warnings))
}

/// Format an objective value for filenames and reports: makespans print with
/// at most one decimal (trailing .0 dropped, as in "90"), costs with five.
pub fn format_objective(value: f64, cost_objective: bool) -> String {
    if cost_objective {
        format!("{:.5}", value)
    } else {
        let tenths = (value * 10.0).round() as i64;
        if tenths % 10 == 0 {
            format!("{}", tenths / 10)
        } else {
            format!("{}.{}", tenths / 10, (tenths % 10).abs())
        }
    }
}

/// Write a solved tour as `<objective>_<instance>.outtour`: 1-based node ids,
/// one per line, -1 terminator. Returns the written path.
pub fn write_outtour(
    tour_order: &[usize],
    objective: f64,
    cost_objective: bool,
    instance_name: &str,
    directory: &Path,
) -> Result<PathBuf, CandgenError> {
    if tour_order.is_empty() {
        return Err(CandgenError::EmptySolution);
    }
    let stem = format!("{}_{}", format_objective(objective, cost_objective), instance_name);
    let path = directory.join(format!("{}.outtour", stem));
    let mut out = String::new();
    for &id in tour_order {
        writeln!(out, "{}", id + 1).unwrap();
    }
    out.push_str("-1\n");
    std::fs::write(&path, out)?;
    Ok(path)
}

/// Read an `.outtour` file back into a 0-based node order.
pub fn parse_outtour(path: &Path) -> Result<Vec<usize>, CandgenError> {
    let text = std::fs::read_to_string(path)?;
    let mut order = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let v: i64 = line
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("non-integer token '{}'", line)))?;
        if v == -1 {
            return Ok(order);
        }
        if v < 1 {
            return Err(parse_err(path, idx + 1, format!("node id {} out of range", v)));
        }
        order.push(v as usize - 1);
    }
    Err(parse_err(path, 0, "missing -1 terminator"))
}
