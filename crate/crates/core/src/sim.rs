//! Closed-loop scenario execution: load the map, synthesise the parking
//! maneuver, plan and smooth the approach, then track the combined
//! reference with the MPC controller while collecting run metrics.
//!
//! When the parking maneuver cannot be constructed because the spot area is
//! blocked, the pipeline degrades gracefully: the approach is planned
//! straight at the spot center and the search's best-effort fallback carries
//! the car as close to the goal as the map allows (`reached_goal` stays
//! false, nothing crashes).

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clearance::{traversable, ClearanceMatrix, ClearanceMode};
use crate::map_io::{self, Cell, MapError, OccupancyGrid};
use crate::mpc::{CostBreakdown, MpcConfig, MpcController, RefSegment, ReferenceTrack};
use crate::parking_geom::{
    plan_parallel, plan_perpendicular, ParkingError, ParkingKind, ParkingPath, ParkingSpec,
};
use crate::search::{self, PlannerConfig, SearchError, SearchResult, SmoothingMode};
use crate::smoothing::{smooth_junction, smooth_path, SplineConfig};
use crate::vehicle::{
    footprint_radius, min_turn_radius, normalize_angle, step, Gear, Pose, VehicleParams,
    VehicleState,
};

/// Goal tolerance: position error below this many cells...
pub const GOAL_POS_TOL: f64 = 0.5;
/// ...and heading error below this many degrees count as parked.
pub const GOAL_HEADING_TOL_DEG: f64 = 5.0;

/// Length of the straight overshoot appended past the parking entry pose so
/// the car arrives aligned before reversing, cells.
const ENTRY_OVERSHOOT: f64 = 1.0;

/// A complete scenario description; serialized into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub map_path: String,
    pub start: Cell,
    /// Initial heading, radians.
    pub start_heading: f64,
    pub parking: ParkingSpec,
    pub vehicle: VehicleParams,
    pub planner: PlannerConfig,
    pub mpc: MpcConfig,
    pub seed: u64,
    /// Extra clearance margin added to the footprint radius, cells.
    pub clearance_margin: f64,
    /// Simulation step budget before the run is abandoned.
    pub tick_budget: usize,
}

impl Scenario {
    pub fn new(map_path: impl Into<String>, start: Cell, parking: ParkingSpec) -> Self {
        let vehicle = VehicleParams::default();
        Scenario {
            map_path: map_path.into(),
            start,
            start_heading: 0.0,
            parking,
            vehicle,
            planner: PlannerConfig::default(),
            mpc: MpcConfig { vehicle, ..MpcConfig::default() },
            seed: 0,
            clearance_margin: 0.0,
            tick_budget: 5000,
        }
    }
}

/// Provenance label of a planned-path segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Approach,
    Parking,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSegment {
    pub label: SegmentLabel,
    pub gear: Gear,
    pub smoothed: bool,
    pub poses: Vec<Pose>,
}

/// The combined reference path with per-segment provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannedPath {
    pub segments: Vec<PathSegment>,
}

impl PlannedPath {
    pub fn poses(&self) -> Vec<Pose> {
        self.segments.iter().flat_map(|s| s.poses.iter().copied()).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.poses.windows(2).map(|w| w[0].distance(&w[1])).sum::<f64>())
            .sum()
    }

    fn reference(&self, goal_heading: f64) -> ReferenceTrack {
        let segments = self
            .segments
            .iter()
            .map(|s| RefSegment::new(s.poses.clone(), s.gear))
            .collect();
        ReferenceTrack::new(segments, goal_heading)
    }
}

/// One tick of telemetry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub a: f64,
    pub delta: f64,
    pub cost: CostBreakdown,
}

/// Everything measured over one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub map_load_ms: f64,
    pub planning_ms: f64,
    /// Total reference length, cells.
    pub path_length: f64,
    /// Simulated seconds until the run ended.
    pub travel_time: f64,
    pub mean_abs_accel: f64,
    pub mean_abs_steer_deg: f64,
    pub reached_goal: bool,
    /// Whether the approach search reached its goal cell.
    pub plan_reached_goal: bool,
    pub final_position_error: f64,
    pub final_heading_error_deg: f64,
    pub tick_budget_exhausted: bool,
    pub search_expansions: usize,
    pub search_open_max: usize,
    /// Clearance cells resolved during the whole run.
    pub clearance_resolved: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TickRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Parking(#[from] ParkingError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// The planning phases only: map, clearance, parking synthesis, approach
/// search, smoothing. Returned by the `plan` CLI subcommand and reused by
/// [`run_scenario`].
pub struct PlanOutcome {
    pub grid: OccupancyGrid,
    pub planned: PlannedPath,
    pub parking: Option<ParkingPath>,
    pub search: SearchResult,
    pub map_load_ms: f64,
    pub planning_ms: f64,
    pub clearance_resolved: usize,
}

fn validate(sc: &Scenario) -> Result<(), PipelineError> {
    sc.vehicle.validate().map_err(PipelineError::Config)?;
    sc.planner.validate().map_err(PipelineError::Config)?;
    sc.mpc.validate().map_err(PipelineError::Config)?;
    Ok(())
}

/// Raw grid path as poses with step-direction headings.
fn polyline_poses(cells: &[Cell]) -> Vec<Pose> {
    let mut out = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        let (from, to) = if i + 1 < cells.len() {
            (cells[i], cells[i + 1])
        } else if i > 0 {
            (cells[i - 1], cells[i])
        } else {
            (cells[i], cells[i])
        };
        let psi = if from == to {
            0.0
        } else {
            (f64::from(to.y - from.y)).atan2(f64::from(to.x - from.x))
        };
        out.push(Pose::new(f64::from(c.x), f64::from(c.y), psi));
    }
    out
}

/// B-spline smoothing with the corner-cut safety loop: retry with denser
/// control points whenever a smoothed pose fails clearance, falling back to
/// the raw polyline if even stride 1 clips an obstacle.
fn smooth_approach(
    raw: &[Cell],
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    mode: ClearanceMode,
) -> (Vec<Pose>, bool) {
    if raw.len() < 2 {
        return (polyline_poses(raw), false);
    }
    let base = SplineConfig::default();
    for stride in (1..=base.sample_stride).rev() {
        let cfg = SplineConfig { sample_stride: stride, ..base };
        if let Ok(poses) = smooth_path(raw, &cfg) {
            let all_clear = poses.iter().all(|p| {
                let cell = Cell::new(p.x.round() as i32, p.y.round() as i32);
                traversable(grid, cm, mode, cell)
            });
            if all_clear {
                return (poses, true);
            }
        }
    }
    (polyline_poses(raw), false)
}

/// Runs the planning phases of a scenario.
pub fn plan_scenario(sc: &Scenario) -> Result<PlanOutcome, PipelineError> {
    validate(sc)?;
    let t0 = Instant::now();
    let grid = map_io::load_grid(&sc.map_path)?;
    let radius = footprint_radius(&sc.vehicle, sc.clearance_margin);
    let mut cm = match sc.planner.use_clearance {
        ClearanceMode::Eager => ClearanceMatrix::precompute_all(&grid, radius),
        _ => ClearanceMatrix::new(&grid, radius),
    };
    let map_load_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    // Parking synthesis; a blocked spot degrades to best-effort planning
    // straight at the spot center.
    let parking = match sc.parking.kind {
        ParkingKind::Perpendicular => plan_perpendicular(&sc.parking, &sc.vehicle, &grid, &mut cm),
        ParkingKind::Parallel => plan_parallel(&sc.parking, &sc.vehicle, &grid, &mut cm),
    };
    let parking = match parking {
        Ok(p) => Some(p),
        Err(ParkingError::ExitBlocked { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let goal_cell = match &parking {
        Some(p) => Cell::new(p.entry_pose.x.round() as i32, p.entry_pose.y.round() as i32),
        None => sc.parking.center,
    };
    let search = search::plan(&grid, &mut cm, sc.start, goal_cell, &sc.planner)?;

    let (approach_poses, approach_smoothed) = match sc.planner.smoothing {
        SmoothingMode::Bspline => {
            smooth_approach(&search.path, &grid, &mut cm, sc.planner.use_clearance)
        }
        SmoothingMode::Off => (polyline_poses(&search.path), false),
    };

    let r_min = min_turn_radius(&sc.vehicle);
    let mut segments = Vec::new();
    match (&parking, search.reached_goal) {
        (Some(pp), true) => {
            // Straight overshoot past the entry pose, along the exit heading,
            // so the approach arrives aligned and the reversal starts from a
            // settled pose. Skipped when the lane ahead is blocked.
            let psi = pp.entry_pose.psi;
            let n_ray = (ENTRY_OVERSHOOT / 0.25) as usize;
            let ray: Vec<Pose> = (0..=n_ray)
                .map(|i| {
                    let s = 0.25 * i as f64;
                    Pose::new(
                        pp.entry_pose.x + psi.cos() * s,
                        pp.entry_pose.y + psi.sin() * s,
                        psi,
                    )
                })
                .collect();
            let ray_clear = ray.iter().all(|p| {
                let cell = Cell::new(p.x.round() as i32, p.y.round() as i32);
                grid.in_bounds(cell) && cm.query(cell).unwrap_or(false)
            });
            let (forward, reverse) = if ray_clear && approach_poses.len() >= 2 {
                let forward = smooth_junction(&approach_poses, &ray, r_min)
                    .unwrap_or_else(|_| approach_poses.clone());
                let mut reverse: Vec<Pose> = ray.iter().rev().copied().collect();
                reverse.extend(pp.poses.iter().skip(1).copied());
                (forward, reverse)
            } else {
                (approach_poses.clone(), pp.poses.clone())
            };
            segments.push(PathSegment {
                label: SegmentLabel::Approach,
                gear: Gear::Forward,
                smoothed: approach_smoothed,
                poses: forward,
            });
            segments.push(PathSegment {
                label: SegmentLabel::Parking,
                gear: Gear::Reverse,
                smoothed: true,
                poses: reverse,
            });
        }
        _ => {
            segments.push(PathSegment {
                label: SegmentLabel::Approach,
                gear: Gear::Forward,
                smoothed: approach_smoothed,
                poses: approach_poses.clone(),
            });
        }
    }
    let planned = PlannedPath { segments };
    let planning_ms = t1.elapsed().as_secs_f64() * 1e3;
    let clearance_resolved = cm.resolved_count();
    drop(cm);

    Ok(PlanOutcome {
        grid,
        planned,
        parking,
        search,
        map_load_ms,
        planning_ms,
        clearance_resolved,
    })
}

/// Runs the full pipeline: planning phases plus the MPC tracking loop.
pub fn run_scenario(sc: &Scenario) -> Result<RunReport, PipelineError> {
    let outcome = plan_scenario(sc)?;
    let PlanOutcome {
        planned,
        parking,
        search,
        map_load_ms,
        planning_ms,
        clearance_resolved,
        ..
    } = outcome;

    let reference = planned.reference(sc.parking.spot_heading);
    let goal_pose = match &parking {
        Some(p) => *p.poses.last().unwrap(),
        None => {
            let end = reference.segments.last().unwrap().end_pose();
            Pose::new(end.x, end.y, sc.parking.spot_heading)
        }
    };
    let ref_end = reference.segments.last().unwrap().end_pose();

    let mpc_cfg = MpcConfig { vehicle: sc.vehicle, ..sc.mpc };
    let mut controller = MpcController::new(mpc_cfg);
    let mut state = VehicleState::new(
        f64::from(sc.start.x),
        f64::from(sc.start.y),
        0.0,
        sc.start_heading,
    );

    let mut trace: Vec<TickRecord> = Vec::new();
    let mut reached_goal = false;
    let mut ticks = 0usize;
    let heading_tol = GOAL_HEADING_TOL_DEG.to_radians();
    while ticks < sc.tick_budget {
        let (u, cost) = controller.tick(state, &reference);
        state = step(state, u, mpc_cfg.dt, &sc.vehicle);
        ticks += 1;
        trace.push(TickRecord {
            t: ticks as f64 * mpc_cfg.dt,
            x: state.x,
            y: state.y,
            psi: state.psi,
            v: state.v,
            a: u.a,
            delta: u.delta,
            cost,
        });
        let pos_err = (state.x - goal_pose.x).hypot(state.y - goal_pose.y);
        let heading_err = normalize_angle(state.psi - goal_pose.psi).abs();
        if parking.is_some() && pos_err < GOAL_POS_TOL && heading_err < heading_tol {
            reached_goal = true;
            break;
        }
        // Settled at the end of the reference without reaching the goal pose
        // (best-effort runs): stop rather than idling out the budget.
        let at_end = (state.x - ref_end.x).hypot(state.y - ref_end.y) < GOAL_POS_TOL;
        let last_segment = controller.segment_idx() + 1 == reference.segments.len();
        if at_end && last_segment && state.v.abs() < 0.02 && ticks > 10 {
            break;
        }
    }

    let mean_abs_accel = if trace.is_empty() {
        0.0
    } else {
        trace.iter().map(|t| t.a.abs()).sum::<f64>() / trace.len() as f64
    };
    let mean_abs_steer_deg = if trace.is_empty() {
        0.0
    } else {
        trace.iter().map(|t| t.delta.abs().to_degrees()).sum::<f64>() / trace.len() as f64
    };

    Ok(RunReport {
        scenario: sc.clone(),
        map_load_ms,
        planning_ms,
        path_length: planned.total_length(),
        travel_time: ticks as f64 * mpc_cfg.dt,
        mean_abs_accel,
        mean_abs_steer_deg,
        reached_goal,
        plan_reached_goal: search.reached_goal,
        final_position_error: (state.x - goal_pose.x).hypot(state.y - goal_pose.y),
        final_heading_error_deg: normalize_angle(state.psi - goal_pose.psi).abs().to_degrees(),
        tick_budget_exhausted: ticks >= sc.tick_budget,
        search_expansions: search.expansions,
        search_open_max: search.open_max,
        clearance_resolved,
        trace,
    })
}

/// One row of the comparison sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub report: RunReport,
}

/// The eight comparison configurations, derived from the base scenario's
/// planner template, in the canonical order: unimproved baseline, the six
/// single-strategy variations, then the fully improved configuration.
pub fn ablation_configs(template: &PlannerConfig) -> Vec<(String, PlannerConfig)> {
    let improved = *template;
    vec![
        ("baseline".into(), PlannerConfig::baseline()),
        (
            "exp1_no_weighting".into(),
            PlannerConfig { w_far: 1.0, w_near: 1.0, tie_break_p: 0.0, ..improved },
        ),
        (
            "exp2_eager_clearance".into(),
            PlannerConfig { use_clearance: ClearanceMode::Eager, ..improved },
        ),
        (
            "exp3_unidirectional_list".into(),
            PlannerConfig { bidirectional: false, use_binary_heap: false, ..improved },
        ),
        (
            "exp4_sixteen_neighborhood".into(),
            PlannerConfig { neighborhood: search::Neighborhood::Sixteen, ..improved },
        ),
        (
            "exp5_no_smoothing".into(),
            PlannerConfig { smoothing: SmoothingMode::Off, ..improved },
        ),
        (
            "exp6_no_smoothing_unidirectional_list".into(),
            PlannerConfig {
                smoothing: SmoothingMode::Off,
                bidirectional: false,
                use_binary_heap: false,
                ..improved
            },
        ),
        ("improved".into(), improved),
    ]
}

/// Runs the eight-row comparison on identical map/start/goal. Row traces are
/// dropped to keep reports readable.
pub fn run_ablation(base: &Scenario) -> Result<Vec<AblationRow>, PipelineError> {
    let mut rows = Vec::new();
    for (label, planner) in ablation_configs(&base.planner) {
        let sc = Scenario { planner, ..base.clone() };
        let mut report = run_scenario(&sc)?;
        report.trace.clear();
        rows.push(AblationRow { label, report });
    }
    Ok(rows)
}

/// Writes the per-tick trace as CSV: `t,x,y,psi,v,a,delta,cost`.
pub fn write_trace_csv(trace: &[TickRecord], path: impl AsRef<Path>) -> Result<(), MapError> {
    let mut out = String::from("t,x,y,psi,v,a,delta,cost\n");
    for r in trace {
        out.push_str(&format!(
            "{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.t, r.x, r.y, r.psi, r.v, r.a, r.delta, r.cost.total
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|source| MapError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}
