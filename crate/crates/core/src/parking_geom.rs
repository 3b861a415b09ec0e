//! Geometric synthesis of the reverse-in parking maneuver.
//!
//! Both spot kinds are planned by first constructing the collision-free
//! EXIT path (driving forward out of the spot), then reversing the pose
//! order so the same geometry is driven backwards into the spot:
//!
//! - perpendicular: straight pull-out, quarter-turn arc toward the lane,
//!   straight safeguard;
//! - parallel: two tangent arcs of opposite curvature (an S), then the
//!   safeguard.
//!
//! Segment joints are blended with quadratic Beziers. The pose where the
//! exit ends — the safeguard endpoint — becomes the `entry_pose` the
//! approach planner must reach. Parallel spots are checked against the
//! maximum-radius constraint derived from the spot corner before any path
//! is built.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::clearance::ClearanceMatrix;
use crate::map_io::{Cell, OccupancyGrid};
use crate::smoothing::smooth_junction;
use crate::vehicle::{min_turn_radius, normalize_angle, Gear, Pose, VehicleParams};

/// Arc-length spacing of generated parking poses, cells.
pub const POSE_STEP: f64 = 0.25;

/// Safeguard length as a multiple of the body length.
pub const SAFEGUARD_FACTOR: f64 = 1.5;

/// Construction arcs prefer this much margin over the minimum radius.
pub const RADIUS_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParkingKind {
    Perpendicular,
    Parallel,
}

/// Where and how to park.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParkingSpec {
    /// Grid coordinate of the spot center.
    pub center: Cell,
    /// Direction the parked car's nose points, radians.
    pub spot_heading: f64,
    pub kind: ParkingKind,
    pub spot_length: f64,
    pub spot_width: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ParkingError {
    #[error("spot ({len:.2} x {width:.2}) smaller than the vehicle body")]
    SpotTooSmall { len: f64, width: f64 },
    #[error("parallel spot infeasible: need turn radius <= {r_max:.3}, vehicle minimum is {r_min:.3}")]
    Infeasible { r_max: f64, r_min: f64 },
    #[error("exit corridor blocked near ({x:.1}, {y:.1})")]
    ExitBlocked { x: f64, y: f64 },
}

/// One primitive of the exit construction, kept for provenance so the
/// maneuver can be replayed with per-segment constant steering.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExitSegment {
    pub start: Pose,
    /// Arc length of the segment, cells.
    pub length: f64,
    /// Constant steering angle reproducing the segment when driven forward.
    pub delta: f64,
    /// Signed turn: +1 left, -1 right, 0 straight.
    pub turn: f64,
    /// Arc radius; infinite for straights.
    pub radius: f64,
}

/// The reverse-gear parking maneuver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParkingPath {
    /// Poses traversed while reversing: entry pose first, parked pose last.
    pub poses: Vec<Pose>,
    /// Where the approach path must deliver the car.
    pub entry_pose: Pose,
    pub gear: Gear,
    /// Exit-order construction segments (parked pose outward).
    pub exit_segments: Vec<ExitSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible { r_max: f64 },
    Infeasible { r_max: f64 },
}

fn unit(psi: f64) -> (f64, f64) {
    (psi.cos(), psi.sin())
}

/// Left normal of a heading.
fn normal(psi: f64) -> (f64, f64) {
    (-psi.sin(), psi.cos())
}

/// Poses along a straight segment, including both endpoints.
fn straight_poses(start: Pose, length: f64) -> Vec<Pose> {
    let n = (length / POSE_STEP).ceil().max(1.0) as usize;
    let (ux, uy) = unit(start.psi);
    (0..=n)
        .map(|i| {
            let s = length * i as f64 / n as f64;
            Pose::new(start.x + ux * s, start.y + uy * s, start.psi)
        })
        .collect()
}

/// Poses along a constant-radius arc, including both endpoints.
/// `turn` +1 curves left, -1 right.
fn arc_poses(start: Pose, radius: f64, sweep: f64, turn: f64) -> Vec<Pose> {
    let (nx, ny) = normal(start.psi);
    let cx = start.x + radius * turn * nx;
    let cy = start.y + radius * turn * ny;
    let length = radius * sweep;
    let n = (length / POSE_STEP).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let a = sweep * i as f64 / n as f64;
            let psi = normalize_angle(start.psi + turn * a);
            let (nx, ny) = normal(psi);
            Pose::new(cx - radius * turn * nx, cy - radius * turn * ny, psi)
        })
        .collect()
}

/// Clearance check for a continuous pose against the nearest grid cell.
fn pose_clear(pose: &Pose, grid: &OccupancyGrid, cm: &mut ClearanceMatrix<'_>) -> bool {
    let cell = Cell::new(pose.x.round() as i32, pose.y.round() as i32);
    grid.in_bounds(cell) && cm.query(cell).unwrap_or(false)
}

fn first_blocked(poses: &[Pose], grid: &OccupancyGrid, cm: &mut ClearanceMatrix<'_>) -> Option<Pose> {
    poses.iter().find(|p| !pose_clear(p, grid, cm)).copied()
}

fn reverse_into_path(exit_poses: Vec<Pose>, segments: Vec<ExitSegment>) -> ParkingPath {
    let mut poses = exit_poses;
    poses.reverse();
    let entry_pose = poses[0];
    ParkingPath { poses, entry_pose, gear: Gear::Reverse, exit_segments: segments }
}

/// Plans the perpendicular (nose-out) maneuver: the exit is a straight
/// pull-out of half the spot length, a quarter-circle toward the lane and
/// the straight safeguard; reversing it parks the car.
pub fn plan_perpendicular(
    spec: &ParkingSpec,
    params: &VehicleParams,
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
) -> Result<ParkingPath, ParkingError> {
    if spec.spot_length < params.body_length || spec.spot_width < params.body_width {
        return Err(ParkingError::SpotTooSmall { len: spec.spot_length, width: spec.spot_width });
    }
    let r_min = min_turn_radius(params);
    let pull_out = spec.spot_length / 2.0;
    let safeguard = SAFEGUARD_FACTOR * params.body_length;
    let parked = Pose::new(
        f64::from(spec.center.x),
        f64::from(spec.center.y),
        normalize_angle(spec.spot_heading),
    );

    let mut last_block: Option<Pose> = None;
    for radius in [RADIUS_SAFETY * r_min, r_min] {
        for turn in [1.0, -1.0] {
            let delta_arc = (params.wheelbase / radius).atan();
            let s0 = straight_poses(parked, pull_out);
            let arc = arc_poses(*s0.last().unwrap(), radius, FRAC_PI_2, turn);
            let sg = straight_poses(*arc.last().unwrap(), safeguard);
            let joined = smooth_junction(&s0, &arc, r_min)
                .and_then(|a| smooth_junction(&a, &sg, r_min))
                .expect("segments share endpoints");
            match first_blocked(&joined, grid, cm) {
                Some(p) => last_block = Some(p),
                None => {
                    let segments = vec![
                        ExitSegment {
                            start: parked,
                            length: pull_out,
                            delta: 0.0,
                            turn: 0.0,
                            radius: f64::INFINITY,
                        },
                        ExitSegment {
                            start: *s0.last().unwrap(),
                            length: radius * FRAC_PI_2,
                            delta: turn * delta_arc,
                            turn,
                            radius,
                        },
                        ExitSegment {
                            start: *arc.last().unwrap(),
                            length: safeguard,
                            delta: 0.0,
                            turn: 0.0,
                            radius: f64::INFINITY,
                        },
                    ];
                    return Ok(reverse_into_path(joined, segments));
                }
            }
        }
    }
    let p = last_block.unwrap_or(parked);
    Err(ParkingError::ExitBlocked { x: p.x, y: p.y })
}

/// Maximum usable turning radius for a parallel spot.
///
/// The instantaneous rotation center sits on the rear-axle line; the offset
/// at which the swinging front-outer corner grazes the spot's front corner
/// follows from equating their radii, and converting that rear-axle offset
/// back to the radius of the tracked center gives the bound the vehicle's
/// minimum turning radius must stay under.
pub fn parallel_feasible(spec: &ParkingSpec, params: &VehicleParams) -> Feasibility {
    let half_l = params.wheelbase / 2.0;
    let alpha = (params.body_length / 2.0 + half_l).powi(2);
    let beta = (spec.spot_length / 2.0 + half_l).powi(2);
    let bw = params.body_width;
    let ws = spec.spot_width;
    let rho = (beta - alpha + (ws * ws - bw * bw) / 4.0) / (bw + ws);
    let r_max = if rho <= 0.0 { 0.0 } else { (rho * rho + half_l * half_l).sqrt() };
    if min_turn_radius(params) <= r_max {
        Feasibility::Feasible { r_max }
    } else {
        Feasibility::Infeasible { r_max }
    }
}

/// Plans the parallel maneuver: the exit swings out of the spot along two
/// tangent arcs of opposite curvature, then runs the straight safeguard
/// down the lane.
pub fn plan_parallel(
    spec: &ParkingSpec,
    params: &VehicleParams,
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
) -> Result<ParkingPath, ParkingError> {
    if spec.spot_length < params.body_length || spec.spot_width < params.body_width {
        return Err(ParkingError::SpotTooSmall { len: spec.spot_length, width: spec.spot_width });
    }
    let r_min = min_turn_radius(params);
    let r_max = match parallel_feasible(spec, params) {
        Feasibility::Feasible { r_max } => r_max,
        Feasibility::Infeasible { r_max } => {
            return Err(ParkingError::Infeasible { r_max, r_min })
        }
    };
    let radius = (RADIUS_SAFETY * r_min).min(r_max).max(r_min);
    let lateral = spec.spot_width;
    // Two mirrored arcs produce a lateral offset of 2R(1 - cos(phi)).
    let sweep = (1.0 - lateral / (2.0 * radius)).acos();
    let safeguard = SAFEGUARD_FACTOR * params.body_length;
    let parked = Pose::new(
        f64::from(spec.center.x),
        f64::from(spec.center.y),
        normalize_angle(spec.spot_heading),
    );
    let delta_arc = (params.wheelbase / radius).atan();

    let mut last_block: Option<Pose> = None;
    for side in [1.0, -1.0] {
        let arc1 = arc_poses(parked, radius, sweep, side);
        let arc2 = arc_poses(*arc1.last().unwrap(), radius, sweep, -side);
        let sg = straight_poses(*arc2.last().unwrap(), safeguard);
        let joined = smooth_junction(&arc1, &arc2, r_min)
            .and_then(|a| smooth_junction(&a, &sg, r_min))
            .expect("segments share endpoints");
        match first_blocked(&joined, grid, cm) {
            Some(p) => last_block = Some(p),
            None => {
                let segments = vec![
                    ExitSegment {
                        start: parked,
                        length: radius * sweep,
                        delta: side * delta_arc,
                        turn: side,
                        radius,
                    },
                    ExitSegment {
                        start: *arc1.last().unwrap(),
                        length: radius * sweep,
                        delta: -side * delta_arc,
                        turn: -side,
                        radius,
                    },
                    ExitSegment {
                        start: *arc2.last().unwrap(),
                        length: safeguard,
                        delta: 0.0,
                        turn: 0.0,
                        radius: f64::INFINITY,
                    },
                ];
                return Ok(reverse_into_path(joined, segments));
            }
        }
    }
    let p = last_block.unwrap_or(parked);
    Err(ParkingError::ExitBlocked { x: p.x, y: p.y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{step, ControlInput, VehicleState};

    fn empty_grid() -> OccupancyGrid {
        OccupancyGrid::new(60, 60, vec![false; 3600]).unwrap()
    }

    fn spec_perp() -> ParkingSpec {
        ParkingSpec {
            center: Cell::new(30, 30),
            spot_heading: -FRAC_PI_2,
            kind: ParkingKind::Perpendicular,
            spot_length: 8.0,
            spot_width: 5.0,
        }
    }

    fn spec_par() -> ParkingSpec {
        ParkingSpec {
            center: Cell::new(30, 30),
            spot_heading: FRAC_PI_2,
            kind: ParkingKind::Parallel,
            spot_length: 10.0,
            spot_width: 4.0,
        }
    }

    #[test]
    fn perpendicular_endpoints() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let path = plan_perpendicular(&spec_perp(), &params, &grid, &mut cm).unwrap();
        assert_eq!(path.gear, Gear::Reverse);
        let first = path.poses.first().unwrap();
        let last = path.poses.last().unwrap();
        assert!(first.distance(&path.entry_pose) < 1e-12);
        assert!((last.x - 30.0).abs() < 1e-9 && (last.y - 30.0).abs() < 1e-9);
        assert!(normalize_angle(last.psi - spec_perp().spot_heading).abs() < 1e-9);
        // Entry pose sits away from the spot by the arc + safeguard geometry.
        assert!(first.distance(last) > min_turn_radius(&params));
    }

    #[test]
    fn perpendicular_too_small_spot() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let spec = ParkingSpec { spot_width: 1.0, ..spec_perp() };
        assert!(matches!(
            plan_perpendicular(&spec, &params, &grid, &mut cm),
            Err(ParkingError::SpotTooSmall { .. })
        ));
    }

    #[test]
    fn perpendicular_wall_blocks_exit() {
        // Wall right across the lane in front of the spot, closer than the
        // turn radius, on both sides.
        let mut cells = vec![false; 3600];
        for x in 0..60 {
            for y in 26..=27 {
                cells[y * 60 + x] = true;
            }
        }
        let grid = OccupancyGrid::new(60, 60, cells).unwrap();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 1.0);
        assert!(matches!(
            plan_perpendicular(&spec_perp(), &params, &grid, &mut cm),
            Err(ParkingError::ExitBlocked { .. })
        ));
    }

    #[test]
    fn parallel_feasibility_examples() {
        let params = VehicleParams::default();
        // Generous spot: three body lengths.
        let spec = ParkingSpec { spot_length: 3.0 * params.body_length, ..spec_par() };
        assert!(matches!(parallel_feasible(&spec, &params), Feasibility::Feasible { .. }));
        // Degenerate spot: exactly body length.
        let spec = ParkingSpec { spot_length: params.body_length, ..spec_par() };
        assert!(matches!(parallel_feasible(&spec, &params), Feasibility::Infeasible { .. }));
    }

    #[test]
    fn parallel_threshold_is_monotone() {
        let params = VehicleParams::default();
        let mut last = false;
        let mut flips = 0;
        let mut sweep_len = params.body_length;
        while sweep_len <= 3.0 * params.body_length {
            let spec = ParkingSpec { spot_length: sweep_len, ..spec_par() };
            let now = matches!(parallel_feasible(&spec, &params), Feasibility::Feasible { .. });
            if now != last {
                flips += 1;
                assert!(now, "feasibility must switch once, from false to true");
            }
            last = now;
            sweep_len += 0.05;
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn parallel_plan_shapes() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let path = plan_parallel(&spec_par(), &params, &grid, &mut cm).unwrap();
        // Two arcs of equal radius and opposite signed curvature.
        let arcs: Vec<&ExitSegment> = path.exit_segments.iter().filter(|s| s.turn != 0.0).collect();
        assert_eq!(arcs.len(), 2);
        assert!((arcs[0].radius - arcs[1].radius).abs() < 1e-12);
        assert!((arcs[0].turn + arcs[1].turn).abs() < 1e-12);
        // Parked heading matches the spot heading.
        let last = path.poses.last().unwrap();
        assert!(normalize_angle(last.psi - spec_par().spot_heading).abs() < 1e-6);
    }

    #[test]
    fn parallel_infeasible_errors() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let spec = ParkingSpec { spot_length: 5.0, ..spec_par() };
        assert!(matches!(
            plan_parallel(&spec, &params, &grid, &mut cm),
            Err(ParkingError::Infeasible { .. })
        ));
    }

    /// Forward-simulates the exit segments with per-segment constant
    /// steering and returns a dense polyline.
    fn simulate_exit(segments: &[ExitSegment], params: &VehicleParams) -> Vec<(f64, f64)> {
        let dt = 2e-3;
        let v = 1.0;
        let mut state = {
            let p = segments[0].start;
            VehicleState::new(p.x, p.y, v, p.psi)
        };
        let mut out = vec![(state.x, state.y)];
        for seg in segments {
            let steps = (seg.length / (v * dt)).round() as usize;
            let u = ControlInput::new(0.0, seg.delta);
            for _ in 0..steps {
                state = step(state, u, dt, params);
                out.push((state.x, state.y));
            }
        }
        out
    }

    fn max_deviation(poses: &[Pose], polyline: &[(f64, f64)]) -> f64 {
        poses
            .iter()
            .map(|p| {
                polyline
                    .iter()
                    .map(|q| (p.x - q.0).hypot(p.y - q.1))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn perpendicular_is_kinematically_realizable() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let path = plan_perpendicular(&spec_perp(), &params, &grid, &mut cm).unwrap();
        let sim = simulate_exit(&path.exit_segments, &params);
        let dev = max_deviation(&path.poses, &sim);
        assert!(dev < 0.1, "max deviation {dev}");
    }

    #[test]
    fn parallel_is_kinematically_realizable() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        let path = plan_parallel(&spec_par(), &params, &grid, &mut cm).unwrap();
        let sim = simulate_exit(&path.exit_segments, &params);
        let dev = max_deviation(&path.poses, &sim);
        assert!(dev < 0.1, "max deviation {dev}");
    }

    #[test]
    fn heading_steps_within_turn_capability() {
        let grid = empty_grid();
        let params = VehicleParams::default();
        let bound = POSE_STEP / min_turn_radius(&params) * 1.05 + 1e-9;
        let mut cm = ClearanceMatrix::new(&grid, 0.0);
        for path in [
            plan_perpendicular(&spec_perp(), &params, &grid, &mut cm).unwrap(),
            plan_parallel(&spec_par(), &params, &grid, &mut cm).unwrap(),
        ] {
            for w in path.poses.windows(2) {
                let ds = w[0].distance(&w[1]).max(POSE_STEP / 2.0);
                let dpsi = normalize_angle(w[1].psi - w[0].psi).abs();
                assert!(
                    dpsi <= bound * (ds / POSE_STEP).max(1.0),
                    "heading step {dpsi} over {ds}"
                );
            }
        }
    }
}
