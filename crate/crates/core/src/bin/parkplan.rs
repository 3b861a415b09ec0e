//! Command-line front end: single planning runs, closed-loop simulations,
//! the eight-row comparison sweep and map inspection.
//!
//! Exit codes: 0 success, 1 scenario failure (blocked start, infeasible
//! spot, ...), 2 usage or parse errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parkplan::clearance::ClearanceMatrix;
use parkplan::config::{self, ConfigError};
use parkplan::map_io::{self, Cell, MapError};
use parkplan::parking_geom::{ParkingKind, ParkingSpec};
use parkplan::sim::{self, PipelineError, Scenario};
use parkplan::vehicle::footprint_radius;

#[derive(Parser)]
#[command(
    name = "parkplan",
    version,
    about = "Grid-based automated valet parking planner and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan and smooth a parking scenario without running the controller.
    /// Prints planning metrics as JSON; --out writes the path CSV.
    Plan(ScenarioArgs),
    /// Run the full pipeline including the MPC tracking loop and print the
    /// run report as JSON.
    Run(RunArgs),
    /// Run the eight comparison configurations on one scenario and print an
    /// aligned table plus a JSON array of reports.
    Ablate(ScenarioArgs),
    /// Print size, obstacle density and a clearance summary of a map.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Perpendicular,
    Parallel,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Map file (text or PGM).
    #[arg(long)]
    map: PathBuf,
    /// Start cell as X,Y or X,Y,PSI_DEG.
    #[arg(long)]
    start: String,
    /// Parking spot center as X,Y.
    #[arg(long)]
    spot: String,
    /// Spot heading in degrees (direction the parked nose points).
    #[arg(long, default_value_t = -90.0, allow_hyphen_values = true)]
    heading: f64,
    #[arg(long, value_enum, default_value = "perpendicular")]
    kind: KindArg,
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (path CSV for `plan`, JSON otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,

    // Planner tuning (flag > config file > default).
    #[arg(long)]
    w_far: Option<f64>,
    #[arg(long)]
    w_near: Option<f64>,
    #[arg(long)]
    switch_distance: Option<f64>,
    #[arg(long)]
    tie_break_p: Option<f64>,
    /// eight | sixteen
    #[arg(long)]
    neighborhood: Option<String>,
    /// lazy | eager | off
    #[arg(long)]
    clearance: Option<String>,
    /// bspline | off
    #[arg(long)]
    smoothing: Option<String>,
    /// euclidean | manhattan | diagonal
    #[arg(long)]
    heuristic: Option<String>,
    /// Use the binary-heap open list.
    #[arg(long, overrides_with = "no_heap")]
    heap: bool,
    #[arg(long, overrides_with = "heap")]
    no_heap: bool,
    /// Search from both ends simultaneously.
    #[arg(long, overrides_with = "no_bidirectional")]
    bidirectional: bool,
    #[arg(long, overrides_with = "bidirectional")]
    no_bidirectional: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the per-tick telemetry as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    map: PathBuf,
    /// Clearance preview radius, cells (default: footprint radius of the
    /// default vehicle).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot write {0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Map(e) => match e {
                MapError::Io { .. } | MapError::Parse { .. } | MapError::EmptyGrid => 2,
                MapError::EmptyPath => 1,
            },
            CliError::Pipeline(PipelineError::Map(_)) => 2,
            CliError::Pipeline(PipelineError::Config(_)) => 2,
            CliError::Pipeline(_) => 1,
            CliError::Io(..) => 1,
        }
    }
}

fn parse_cell(text: &str, what: &str) -> Result<Cell, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("{what}: expected X,Y, got {text:?}")));
    }
    let x = parts[0].trim().parse().map_err(|_| {
        CliError::Usage(format!("{what}: bad X coordinate {:?}", parts[0]))
    })?;
    let y = parts[1].trim().parse().map_err(|_| {
        CliError::Usage(format!("{what}: bad Y coordinate {:?}", parts[1]))
    })?;
    Ok(Cell::new(x, y))
}

fn parse_start(text: &str) -> Result<(Cell, f64), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.len() {
        2 => Ok((parse_cell(text, "--start")?, 0.0)),
        3 => {
            let cell = parse_cell(&format!("{},{}", parts[0], parts[1]), "--start")?;
            let deg: f64 = parts[2].trim().parse().map_err(|_| {
                CliError::Usage(format!("--start: bad heading {:?}", parts[2]))
            })?;
            Ok((cell, deg.to_radians()))
        }
        _ => Err(CliError::Usage(format!(
            "--start: expected X,Y or X,Y,PSI_DEG, got {text:?}"
        ))),
    }
}

fn build_scenario(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let (start, start_heading) = parse_start(&args.start)?;
    let spot = parse_cell(&args.spot, "--spot")?;
    let parking = ParkingSpec {
        center: spot,
        spot_heading: args.heading.to_radians(),
        kind: match args.kind {
            KindArg::Perpendicular => ParkingKind::Perpendicular,
            KindArg::Parallel => ParkingKind::Parallel,
        },
        spot_length: 8.0,
        spot_width: 5.0,
    };
    let mut sc = Scenario::new(args.map.display().to_string(), start, parking);
    sc.start_heading = start_heading;
    sc.seed = args.seed;

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let kv = config::parse_kv(&text)?;
        config::apply_to_scenario(&mut sc, &kv)?;
    }

    // Flags beat the file.
    let mut flag = |key: &str, value: Option<String>| -> Result<(), CliError> {
        if let Some(v) = value {
            config::apply_one(&mut sc, key, &v)?;
        }
        Ok(())
    };
    flag("w_far", args.w_far.map(|v| v.to_string()))?;
    flag("w_near", args.w_near.map(|v| v.to_string()))?;
    flag("switch_distance", args.switch_distance.map(|v| v.to_string()))?;
    flag("tie_break_p", args.tie_break_p.map(|v| v.to_string()))?;
    flag("neighborhood", args.neighborhood.clone())?;
    flag("clearance", args.clearance.clone())?;
    flag("smoothing", args.smoothing.clone())?;
    flag("heuristic", args.heuristic.clone())?;
    let heap = if args.no_heap {
        Some("false")
    } else if args.heap {
        Some("true")
    } else {
        None
    };
    flag("heap", heap.map(String::from))?;
    let bidi = if args.no_bidirectional {
        Some("false")
    } else if args.bidirectional {
        Some("true")
    } else {
        None
    };
    flag("bidirectional", bidi.map(String::from))?;
    Ok(sc)
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(path.display().to_string(), e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_plan(args: &ScenarioArgs) -> Result<(), CliError> {
    let sc = build_scenario(args)?;
    let outcome = sim::plan_scenario(&sc)?;
    let poses = outcome.planned.poses();
    if let Some(path) = &args.out {
        map_io::write_path_csv(&poses, path)?;
    }
    let metrics = serde_json::json!({
        "scenario": sc,
        "map_load_ms": outcome.map_load_ms,
        "planning_ms": outcome.planning_ms,
        "path_length": outcome.planned.total_length(),
        "plan_reached_goal": outcome.search.reached_goal,
        "best_effort_cell": outcome.search.best_effort_cell,
        "expansions": outcome.search.expansions,
        "open_max": outcome.search.open_max,
        "clearance_resolved": outcome.clearance_resolved,
        "pose_count": poses.len(),
        "segments": outcome.planned.segments.iter().map(|s| {
            serde_json::json!({
                "label": s.label,
                "gear": s.gear,
                "smoothed": s.smoothed,
                "poses": s.poses.len(),
            })
        }).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&metrics).expect("serializable"));
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let sc = build_scenario(&args.scenario)?;
    let report = sim::run_scenario(&sc)?;
    if let Some(path) = &args.trace {
        sim::write_trace_csv(&report.trace, path)?;
    }
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    write_or_print(&args.scenario.out, &text)?;
    if args.scenario.out.is_some() {
        eprintln!(
            "reached_goal={} travel_time={:.1}s mean|a|={:.3} mean|delta|={:.2}deg",
            report.reached_goal, report.travel_time, report.mean_abs_accel, report.mean_abs_steer_deg
        );
    }
    Ok(())
}

fn cmd_ablate(args: &ScenarioArgs) -> Result<(), CliError> {
    let sc = build_scenario(args)?;
    let rows = sim::run_ablation(&sc)?;
    let mut table = String::new();
    table.push_str(&format!(
        "{:<38} {:>12} {:>12} {:>10} {:>9} {:>8} {:>11} {:>8}\n",
        "configuration",
        "map_load_ms",
        "planning_ms",
        "path_len",
        "travel_s",
        "mean|a|",
        "mean|d|_deg",
        "reached"
    ));
    for row in &rows {
        let r = &row.report;
        table.push_str(&format!(
            "{:<38} {:>12.2} {:>12.2} {:>10.2} {:>9.1} {:>8.3} {:>11.2} {:>8}\n",
            row.label,
            r.map_load_ms,
            r.planning_ms,
            r.path_length,
            r.travel_time,
            r.mean_abs_accel,
            r.mean_abs_steer_deg,
            r.reached_goal
        ));
    }
    print!("{table}");
    let json = serde_json::to_string_pretty(&rows).expect("serializable");
    match &args.out {
        Some(path) => {
            std::fs::write(path, json).map_err(|e| CliError::Io(path.display().to_string(), e))?
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), CliError> {
    let grid = map_io::load_grid(&args.map)?;
    let radius = args
        .radius
        .unwrap_or_else(|| footprint_radius(&Default::default(), 0.0));
    let cm = ClearanceMatrix::precompute_all(&grid, radius);
    let mut impassable = 0usize;
    for y in 0..grid.height() as i32 {
        for x in 0..grid.width() as i32 {
            if !matches!(
                cm.state(Cell::new(x, y)),
                Ok(parkplan::clearance::CellState::Traversable)
            ) {
                impassable += 1;
            }
        }
    }
    let total = grid.cell_count();
    let stats = serde_json::json!({
        "map": args.map.display().to_string(),
        "width": grid.width(),
        "height": grid.height(),
        "obstacle_count": grid.obstacle_count(),
        "obstacle_density": grid.obstacle_count() as f64 / total as f64,
        "clearance": {
            "radius": radius,
            "impassable": impassable,
            "traversable": total - impassable,
            "impassable_fraction": impassable as f64 / total as f64,
        },
    });
    let text = serde_json::to_string_pretty(&stats).expect("serializable");
    write_or_print(&args.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
