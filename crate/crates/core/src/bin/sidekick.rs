//! Command-line front end: instance conversion, solving, validation,
//! rendering and benchmark tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sidekick::bench::{
    self, gap_table, infer_config, instance_from_graph, load_murray, load_poikonen,
    load_sacramento, render_svg, validate_scaled, BenchmarkRecord, ReferenceTable,
};
use sidekick::candgen::{
    expand_candidates, parse_drone_file, parse_outtour, parse_par_file, write_drone_file,
    write_outtour, write_par_file, ParSettings,
};
use sidekick::codec::GiantTour;
use sidekick::eval::evaluate_tour;
use sidekick::model::{
    build_distance_model, DistanceModel, Instance, Objective, RevisitPolicy,
    VariantConfig,
};
use sidekick::oracle::{brute_force, OracleLimits};
use sidekick::plangen::{random_instance, rng_from_seed};
use sidekick::search::{default_k, solve, SearchSettings};

#[derive(Parser)]
#[command(name = "sidekick", version, about = "Truck-and-drone routing solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an instance (or generate a random one) into solver-format
    /// .drone/.par files.
    Generate(GenerateArgs),
    /// Solve a .par file and write the tour next to it.
    Solve(SolveArgs),
    /// Re-check a written tour against its problem file.
    Validate(ValidateArgs),
    /// Draw a solved tour as SVG.
    Render(RenderArgs),
    /// Solve a whole instance set and tabulate gaps against a reference CSV.
    Bench(BenchArgs),
    /// Exhaustive optimum for a small instance.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Poikonen,
    Sacramento,
    Murray,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Fstsp,
    TspMd,
    Vrpd11,
    Vrpd1M,
    FstspMurray,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputArg {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct ConfigFlags {
    /// Problem variant.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// 1 = no revisits (default), 2 = revisits allowed.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    config: Option<u8>,
    /// Drones per truck.
    #[arg(long)]
    drones: Option<usize>,
    /// Trucks in the fleet.
    #[arg(long)]
    trucks: Option<usize>,
    /// Drone endurance in minutes (Murray-style runs).
    #[arg(long)]
    endurance: Option<f64>,
    /// Fixed-point minutes scale.
    #[arg(long, default_value_t = 10)]
    scale: i64,
    /// Candidate locations per customer (default: min(7, pool + 1)).
    #[arg(long)]
    k: Option<usize>,
}

impl ConfigFlags {
    fn build(&self, base: Option<VariantConfig>) -> Result<VariantConfig, String> {
        let mut cfg = match (self.variant, base) {
            (Some(v), _) => {
                let trucks = self.trucks.unwrap_or(1);
                let drones = self.drones.unwrap_or(1);
                match v {
                    VariantArg::Fstsp => VariantConfig::fstsp(),
                    VariantArg::TspMd => VariantConfig::tsp_md(self.drones.unwrap_or(5)),
                    VariantArg::Vrpd11 => VariantConfig::vrpd_11(trucks),
                    VariantArg::Vrpd1M => VariantConfig::vrpd_1m(trucks, drones),
                    VariantArg::FstspMurray => {
                        VariantConfig::fstsp_murray(self.endurance.unwrap_or(20.0))
                    }
                }
            }
            (None, Some(base)) => base,
            (None, None) => VariantConfig::fstsp(),
        };
        if let Some(d) = self.drones {
            cfg.drone_count = d;
        }
        if let Some(t) = self.trucks {
            cfg.truck_count = t;
        }
        if let Some(e) = self.endurance {
            cfg.endurance = e;
        }
        if self.config == Some(2) {
            cfg.revisit_policy = RevisitPolicy::RevisitOk;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance file (or directory for murray format).
    #[arg(long, required_unless_present = "random")]
    instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "poikonen")]
    format: FormatArg,
    /// Generate a random instance with this many customers instead.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where the .drone/.par pair goes.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// TIME_LIMIT to write into the .par file.
    #[arg(long)]
    time_limit: Option<f64>,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct SolveArgs {
    /// .par file; PROBLEM_FILE inside points at the .drone file.
    par: PathBuf,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputArg,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct ValidateArgs {
    /// .outtour file.
    tour: PathBuf,
    /// .drone problem file.
    drone: PathBuf,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct RenderArgs {
    /// .outtour file.
    tour: PathBuf,
    /// .drone problem file.
    drone: PathBuf,
    /// Original instance file, for coordinates.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "poikonen")]
    format: FormatArg,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files (or per-instance directories for murray).
    set: PathBuf,
    #[arg(long, value_enum, default_value = "poikonen")]
    format: FormatArg,
    /// Reference CSV with an `instance` column.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Reference column to compute gaps against.
    #[arg(long, default_value = "z_star")]
    column: String,
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write each solved .outtour here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputArg,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "poikonen")]
    format: FormatArg,
    /// Evaluation cap before giving up.
    #[arg(long)]
    max_evals: Option<u64>,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    instance: &'a str,
    objective: f64,
    feasible: bool,
    dcus: usize,
    routes: usize,
    iteration_found: u64,
    iterations: u64,
    wall_time_s: f64,
    tour_file: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Render(args) => cmd_render(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn load_instance(
    path: &Path,
    format: FormatArg,
    cfg: &VariantConfig,
    scale: i64,
) -> Result<(Instance, DistanceModel), String> {
    let err = |e: bench::BenchError| e.to_string();
    match format {
        FormatArg::Poikonen => {
            let inst = load_poikonen(path).map_err(err)?;
            let dm = build_distance_model(&inst, cfg, scale).map_err(|e| e.to_string())?;
            Ok((inst, dm))
        }
        FormatArg::Sacramento => {
            let inst = load_sacramento(path).map_err(err)?;
            let dm = build_distance_model(&inst, cfg, scale).map_err(|e| e.to_string())?;
            Ok((inst, dm))
        }
        FormatArg::Murray => load_murray(path, cfg, scale).map_err(err),
        FormatArg::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let inst: Instance = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let dm = build_distance_model(&inst, cfg, scale).map_err(|e| e.to_string())?;
            Ok((inst, dm))
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, String> {
    let cfg = args.flags.build(None)?;
    let (instance, dm) = match args.random {
        Some(n) => {
            let mut rng = rng_from_seed(args.seed);
            let instance = random_instance(&mut rng, n, &format!("rnd-{}-{}", n, args.seed));
            let dm =
                build_distance_model(&instance, &cfg, args.flags.scale).map_err(|e| e.to_string())?;
            (instance, dm)
        }
        None => load_instance(args.instance.as_ref().unwrap(), args.format, &cfg, args.flags.scale)?,
    };
    let k = args.flags.k.unwrap_or_else(|| default_k(&instance));
    let graph = expand_candidates(&instance, &dm, &cfg, k).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| e.to_string())?;
    let drone_path = args.out_dir.join(format!("{}.drone", instance.name));
    write_drone_file(&graph, &drone_path).map_err(|e| e.to_string())?;
    let mut par = ParSettings::new(&drone_path);
    par.time_limit = args.time_limit;
    par.seed = Some(args.seed);
    par.config = Some(if cfg.revisit_policy == RevisitPolicy::RevisitOk { 2 } else { 1 });
    let par_path = args.out_dir.join(format!("{}.par", instance.name));
    write_par_file(&par, &par_path).map_err(|e| e.to_string())?;
    println!("{}", drone_path.display());
    println!("{}", par_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let (par, warnings) = parse_par_file(&args.par).map_err(|e| e.to_string())?;
    for w in &warnings {
        eprintln!("warning: {}", w);
    }
    let problem = if par.problem_file.is_absolute() {
        par.problem_file.clone()
    } else {
        args.par.parent().unwrap_or(Path::new(".")).join(&par.problem_file)
    };
    let graph = parse_drone_file(&problem).map_err(|e| e.to_string())?;
    let mut flags = args.flags.clone();
    if flags.config.is_none() {
        flags.config = par.config;
    }
    let cfg = flags.build(Some(infer_config(&graph)))?;
    let (instance, dm) =
        instance_from_graph(&graph, &cfg, args.flags.scale).map_err(|e| e.to_string())?;

    let mut settings = SearchSettings {
        time_limit: args.time_limit.or(par.time_limit).unwrap_or(10.0),
        seed: args.seed.or(par.seed).unwrap_or(1),
        ..Default::default()
    };
    let runs = par.runs.unwrap_or(1).max(1);
    let mut best = solve(&graph, &instance, &dm, &cfg, &settings).map_err(|e| e.to_string())?;
    for extra in 1..runs {
        settings.seed += 1;
        settings.time_limit = args.time_limit.or(par.time_limit).unwrap_or(10.0);
        let next = solve(&graph, &instance, &dm, &cfg, &settings).map_err(|e| e.to_string())?;
        if next.best_penalty.key() < best.best_penalty.key() {
            best = next;
        }
        let _ = extra;
    }

    let out_dir = par
        .output_tour_file
        .as_deref()
        .map(|p| if p.is_absolute() { p.to_path_buf() } else { args.par.parent().unwrap_or(Path::new(".")).join(p) })
        .unwrap_or_else(|| args.par.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
    let tour_path = write_outtour(
        &best.best_tour.order,
        best.best_penalty.soft_objective,
        cfg.objective == Objective::Cost,
        &graph.name,
        &out_dir,
    )
    .map_err(|e| e.to_string())?;

    let record = SolveRecord {
        instance: &graph.name,
        objective: best.best_penalty.soft_objective,
        feasible: best.best_penalty.is_feasible(),
        dcus: best.best_solution.drone_served_count(),
        routes: best.best_solution.used_routes(),
        iteration_found: best.iteration_found,
        iterations: best.iterations,
        wall_time_s: best.wall_time,
        tour_file: tour_path.display().to_string(),
    };
    match args.output {
        OutputArg::Json => {
            println!("{}", serde_json::to_string(&record).map_err(|e| e.to_string())?)
        }
        OutputArg::Csv => {
            println!("instance,objective,feasible,dcus,routes,iter_found,iter,time_s,tour_file");
            println!(
                "{},{:.5},{},{},{},{},{},{:.2},{}",
                record.instance,
                record.objective,
                record.feasible,
                record.dcus,
                record.routes,
                record.iteration_found,
                record.iterations,
                record.wall_time_s,
                record.tour_file
            );
        }
    }
    if !best.best_penalty.is_feasible() {
        eprintln!("no feasible solution found: {:?}", best.best_penalty.counts);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, String> {
    let graph = parse_drone_file(&args.drone).map_err(|e| e.to_string())?;
    let cfg = args.flags.build(Some(infer_config(&graph)))?;
    let report = validate_scaled(&args.tour, &args.drone, &cfg, args.flags.scale)
        .map_err(|e| e.to_string())?;
    if report.pass {
        println!(
            "PASS {}: objective {} confirmed ({:.5})",
            report.instance, report.embedded_objective, report.recomputed_objective
        );
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL {}:", report.instance);
        for msg in &report.messages {
            println!("  {}", msg);
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_render(args: RenderArgs) -> Result<ExitCode, String> {
    let graph = parse_drone_file(&args.drone).map_err(|e| e.to_string())?;
    let cfg = args.flags.build(Some(infer_config(&graph)))?;
    let (instance, dm) = load_instance(&args.instance, args.format, &cfg, args.flags.scale)?;
    let order = parse_outtour(&args.tour).map_err(|e| e.to_string())?;
    let sol = evaluate_tour(&GiantTour { order }, &graph, &instance, &dm, &cfg);
    render_svg(&sol, &instance, &args.out).map_err(|e| e.to_string())?;
    println!("{}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, String> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.set)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| match args.format {
            FormatArg::Murray => p.is_dir(),
            _ => p.is_file(),
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(format!("no instances found in {}", args.set.display()));
    }
    let cfg = args.flags.build(None)?;
    let reference = match &args.reference {
        Some(p) => Some(ReferenceTable::load(p).map_err(|e| e.to_string())?),
        None => None,
    };

    let mut records = Vec::new();
    let mut any_infeasible = false;
    for (idx, path) in entries.iter().enumerate() {
        let (instance, dm) = load_instance(path, args.format, &cfg, args.flags.scale)?;
        let k = args.flags.k.unwrap_or_else(|| default_k(&instance));
        let graph = expand_candidates(&instance, &dm, &cfg, k).map_err(|e| e.to_string())?;
        let settings = SearchSettings {
            time_limit: args.time_limit,
            seed: args.seed + idx as u64,
            ..Default::default()
        };
        let result = solve(&graph, &instance, &dm, &cfg, &settings).map_err(|e| e.to_string())?;
        if let Some(dir) = &args.out_dir {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            write_outtour(
                &result.best_tour.order,
                result.best_penalty.soft_objective,
                cfg.objective == Objective::Cost,
                &instance.name,
                dir,
            )
            .map_err(|e| e.to_string())?;
        }
        any_infeasible |= !result.best_penalty.is_feasible();
        let mut record = BenchmarkRecord {
            instance: instance.name.clone(),
            variant: cfg.variant,
            objective: result.best_penalty.soft_objective,
            feasible: result.best_penalty.is_feasible(),
            dcus: result.best_solution.drone_served_count(),
            drones: cfg.drone_count.min(result.best_solution.drone_served_count()),
            routes: result.best_solution.used_routes(),
            iteration_found: result.iteration_found,
            wall_time: result.wall_time,
            gaps: Vec::new(),
        };
        if let Some(table) = &reference {
            if let Some(z) = table.get(&record.instance, &args.column) {
                record.push_gap(&args.column, z);
            }
        }
        records.push(record);
    }

    match (&reference, args.output) {
        (Some(table), OutputArg::Csv) => print!("{}", gap_table(&records, table, &args.column)),
        (None, OutputArg::Csv) => {
            println!("instance,objective,feasible,dcus,routes,iter_found,time_s");
            for r in &records {
                println!(
                    "{},{:.5},{},{},{},{},{:.2}",
                    r.instance, r.objective, r.feasible, r.dcus, r.routes, r.iteration_found,
                    r.wall_time
                );
            }
        }
        (_, OutputArg::Json) => {
            for r in &records {
                let gaps: serde_json::Map<String, serde_json::Value> = r
                    .gaps
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                    .collect();
                let row = serde_json::json!({
                    "instance": r.instance,
                    "objective": r.objective,
                    "feasible": r.feasible,
                    "dcus": r.dcus,
                    "routes": r.routes,
                    "iteration_found": r.iteration_found,
                    "wall_time_s": r.wall_time,
                    "gaps": gaps,
                });
                println!("{}", row);
            }
        }
    }
    Ok(if any_infeasible { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, String> {
    let cfg = args.flags.build(None)?;
    let (instance, dm) = load_instance(&args.instance, args.format, &cfg, args.flags.scale)?;
    let limits = match args.max_evals {
        Some(cap) => OracleLimits { max_evaluations: Some(cap) },
        None => OracleLimits::default(),
    };
    let result = brute_force(&instance, &dm, &cfg, limits).map_err(|e| e.to_string())?;
    println!(
        "instance,optimum,dcus,enumerated,time_s\n{},{:.5},{},{},{:.2}",
        instance.name,
        result.optimum,
        result.plan.drone_served_count(),
        result.enumerated,
        result.wall_time
    );
    Ok(ExitCode::SUCCESS)
}
