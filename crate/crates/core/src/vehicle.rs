//! Kinematic bicycle model, vehicle state/control types and Ackermann
//! turning geometry.
//!
//! Units are grid cells and seconds throughout; the grid's `resolution`
//! converts to meters only when reports ask for it. Speed is signed so the
//! same integrator covers forward driving and reversing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A planar pose: position plus heading (radians, counterclockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Pose { x, y, psi }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Travel direction of a path segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gear {
    Forward,
    Reverse,
}

/// Vehicle state `[x, y, v, psi]`; `v` is negative while reversing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub psi: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, v: f64, psi: f64) -> Self {
        VehicleState { x, y, v, psi: normalize_angle(psi) }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.psi)
    }
}

/// Control command `[a, delta]`: acceleration and front steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub a: f64,
    pub delta: f64,
}

impl ControlInput {
    pub fn new(a: f64, delta: f64) -> Self {
        ControlInput { a, delta }
    }

    /// Clamps both components into the params' box constraints.
    pub fn clamped(self, params: &VehicleParams) -> Self {
        ControlInput {
            a: self.a.clamp(params.a_min, params.a_max),
            delta: self.delta.clamp(-params.delta_max, params.delta_max),
        }
    }
}

/// Geometry and actuation limits of the simulated car, in cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Wheelbase L.
    pub wheelbase: f64,
    /// Track width W.
    pub track: f64,
    pub body_length: f64,
    pub body_width: f64,
    /// Maximum front steering angle, radians.
    pub delta_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub v_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.8,
            track: 1.6,
            body_length: 4.5,
            body_width: 2.0,
            delta_max: 33.0_f64.to_radians(),
            a_min: -1.0,
            a_max: 1.0,
            v_max: 2.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.wheelbase > 0.0) {
            return Err("wheelbase must be positive".into());
        }
        if !(self.track > 0.0) {
            return Err("track must be positive".into());
        }
        if !(self.delta_max > 0.0 && self.delta_max < PI / 2.0) {
            return Err("delta_max must lie in (0, pi/2)".into());
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err("acceleration bounds must straddle zero".into());
        }
        if !(self.v_max > 0.0) {
            return Err("v_max must be positive".into());
        }
        Ok(())
    }
}

/// One explicit-Euler step of the bicycle model:
/// `x += v cos(psi) dt`, `y += v sin(psi) dt`, `v += a dt` (clamped),
/// `psi += v tan(delta)/L dt` (normalized).
pub fn step(state: VehicleState, u: ControlInput, dt: f64, params: &VehicleParams) -> VehicleState {
    debug_assert!(dt > 0.0);
    let x = state.x + state.v * state.psi.cos() * dt;
    let y = state.y + state.v * state.psi.sin() * dt;
    let v = (state.v + u.a * dt).clamp(-params.v_max, params.v_max);
    let psi = normalize_angle(state.psi + state.v * u.delta.tan() / params.wheelbase * dt);
    VehicleState { x, y, v, psi }
}

/// Minimum turning radius `R = L / tan(delta_max)` of the tracked point.
pub fn min_turn_radius(params: &VehicleParams) -> f64 {
    params.wheelbase / params.delta_max.tan()
}

/// Radius of the circumscribed body circle plus a safety margin; the
/// clearance matrix inflates obstacles by this amount.
pub fn footprint_radius(params: &VehicleParams, margin: f64) -> f64 {
    debug_assert!(margin >= 0.0);
    (params.body_length / 2.0).hypot(params.body_width / 2.0) + margin
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn straight_motion() {
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0);
        let next = step(s, ControlInput::new(0.0, 0.0), 1.0, &params());
        assert_eq!((next.x, next.y, next.v, next.psi), (1.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn zero_speed_means_no_rotation() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.3);
        let next = step(s, ControlInput::new(0.7, 0.5), 1.0, &params());
        assert_eq!(next.x, 0.0);
        assert_eq!(next.y, 0.0);
        assert_eq!(next.psi, 0.3);
        assert!((next.v - 0.7).abs() < 1e-15);
    }

    #[test]
    fn heading_update_matches_model() {
        // 0.1 * tan(0.2) / 2.5, evaluated independently.
        let p = VehicleParams { wheelbase: 2.5, ..params() };
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0);
        let next = step(s, ControlInput::new(0.0, 0.2), 0.1, &p);
        assert!((next.psi - 0.0081084014203469).abs() < 1e-12);
    }

    #[test]
    fn min_turn_radius_values() {
        let p = VehicleParams { wheelbase: 2.7, delta_max: PI / 4.0, ..params() };
        assert!((min_turn_radius(&p) - 2.7).abs() < 1e-12);
        let p = VehicleParams { wheelbase: 2.7, delta_max: PI / 6.0, ..params() };
        assert!((min_turn_radius(&p) - 4.676537180435969).abs() < 1e-9);
    }

    #[test]
    fn footprint_radius_values() {
        let p = VehicleParams { body_length: 4.0, body_width: 2.0, ..params() };
        assert!((footprint_radius(&p, 0.0) - 2.23606797749979).abs() < 1e-12);
        let p0 = VehicleParams { body_length: 0.0, body_width: 0.0, ..params() };
        assert_eq!(footprint_radius(&p0, 1.0), 1.0);
        // Margin is additive.
        assert!((footprint_radius(&p, 1.0) - footprint_radius(&p, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_control_zero_speed_is_identity() {
        let s = VehicleState::new(3.5, -2.0, 0.0, 1.2);
        let next = step(s, ControlInput::default(), 0.1, &params());
        assert_eq!((next.x, next.y, next.psi), (s.x, s.y, s.psi));
    }

    #[test]
    fn heading_rate_matches_finite_differences() {
        let p = params();
        let s = VehicleState::new(0.0, 0.0, 1.3, 0.4);
        let delta = 0.25_f64;
        let rate = s.v * delta.tan() / p.wheelbase;
        let mut prev_err = f64::INFINITY;
        for dt in [1e-2, 1e-3, 1e-4] {
            let next = step(s, ControlInput::new(0.0, delta), dt, &p);
            let fd = normalize_angle(next.psi - s.psi) / dt;
            let err = (fd - rate).abs();
            // Explicit Euler makes the first difference exact up to rounding,
            // which certainly shrinks at least linearly.
            assert!(err <= prev_err.max(rate.abs() * dt) + 1e-12, "dt={dt} err={err}");
            prev_err = err.max(1e-15);
        }
    }

    #[test]
    fn constant_steer_traces_min_radius_circle() {
        let p = params();
        let v = 1.0;
        let dt = 0.05;
        let r = min_turn_radius(&p);
        let mut s = VehicleState::new(0.0, 0.0, v, 0.0);
        // Turn center sits one radius to the left of the initial pose.
        let (cx, cy) = (0.0, r);
        let u = ControlInput::new(0.0, p.delta_max);
        let steps = (2.0 * PI * r / (v * dt)).ceil() as usize;
        for _ in 0..steps {
            s = step(s, u, dt, &p);
            let dist = (s.x - cx).hypot(s.y - cy);
            assert!((dist - r).abs() <= 2.0 * v * dt, "drifted {} from radius {}", dist, r);
        }
    }

    #[test]
    fn psi_stays_normalized() {
        let p = params();
        let mut s = VehicleState::new(0.0, 0.0, 2.0, 3.0);
        for i in 0..500 {
            let delta = if i % 2 == 0 { p.delta_max } else { -p.delta_max / 3.0 };
            s = step(s, ControlInput::new(0.1, delta), 0.5, &p);
            assert!(s.psi > -PI && s.psi <= PI, "psi {} out of range", s.psi);
        }
    }

    #[test]
    fn normalize_angle_range_and_branch() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        for k in -20..20 {
            let a = 0.37 * k as f64;
            let n = normalize_angle(a);
            assert!(n > -PI && n <= PI);
            assert!(((a - n) / (2.0 * PI)).rem_euclid(1.0) < 1e-9);
        }
    }
}
