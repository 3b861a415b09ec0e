//! Receding-horizon tracking controller.
//!
//! Each tick optimizes an N-step control sequence against a four-term cost:
//! control effort, control smoothness, position tracking against the
//! reference, and (once within `align_distance` of the goal) heading
//! alignment. The optimizer is projected gradient descent on the flattened
//! sequence with central finite-difference gradients — deterministic and
//! bounded-time — warm-started from the previous solution shifted one step.
//! The returned sequence never costs more than the zero sequence or the
//! hold-previous sequence; both are evaluated as candidates.
//!
//! The reference is a geometric path, so the expected position D(t+k) is
//! derived by projecting onto the active gear segment and advancing along
//! arc length at the segment's speed profile (cruise speed with a linear
//! taper to zero over the last few cells).

use serde::{Deserialize, Serialize};

use crate::vehicle::{normalize_angle, step, ControlInput, Gear, Pose, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    /// Prediction horizon, steps.
    pub horizon: usize,
    /// Control period, seconds.
    pub dt: f64,
    /// Control effort weight.
    pub w1: f64,
    /// Control smoothness weight.
    pub w2: f64,
    /// Position tracking weight.
    pub w3: f64,
    /// Heading alignment weight (gated by `align_distance`).
    pub w4: f64,
    /// Heading alignment activates within this distance of the goal, cells.
    pub align_distance: f64,
    /// Gradient-descent iterations per tick.
    pub iterations: usize,
    /// Cruise speed tracked on forward segments, cells/s.
    pub v_cruise_forward: f64,
    /// Cruise speed tracked on reverse segments, cells/s.
    pub v_cruise_reverse: f64,
    /// The speed profile tapers linearly to zero over this many cells at the
    /// end of each segment.
    pub taper_length: f64,
    /// Actuation limits and the model geometry.
    pub vehicle: VehicleParams,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 10,
            dt: 0.1,
            w1: 0.1,
            w2: 1.0,
            w3: 2.0,
            w4: 5.0,
            align_distance: 5.0,
            iterations: 30,
            v_cruise_forward: 1.0,
            v_cruise_reverse: 0.5,
            taper_length: 3.0,
            vehicle: VehicleParams::default(),
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !(self.dt > 0.0) {
            return Err("dt must be positive".into());
        }
        if [self.w1, self.w2, self.w3, self.w4].iter().any(|w| *w < 0.0) {
            return Err("weights must be non-negative".into());
        }
        Ok(())
    }
}

/// One gear-homogeneous stretch of the reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefSegment {
    pub poses: Vec<Pose>,
    pub gear: Gear,
    /// Cumulative arc length per pose.
    cum_s: Vec<f64>,
}

impl RefSegment {
    pub fn new(poses: Vec<Pose>, gear: Gear) -> Self {
        assert!(!poses.is_empty(), "reference segment cannot be empty");
        let mut cum_s = Vec::with_capacity(poses.len());
        let mut s = 0.0;
        cum_s.push(0.0);
        for w in poses.windows(2) {
            s += w[0].distance(&w[1]);
            cum_s.push(s);
        }
        RefSegment { poses, gear, cum_s }
    }

    pub fn length(&self) -> f64 {
        *self.cum_s.last().unwrap()
    }

    pub fn end_pose(&self) -> Pose {
        *self.poses.last().unwrap()
    }

    /// Arc-length position of the point on the segment nearest to `(x, y)`.
    fn project(&self, x: f64, y: f64) -> f64 {
        let mut best_s = 0.0;
        let mut best_d2 = f64::INFINITY;
        for i in 0..self.poses.len() - 1 {
            let a = &self.poses[i];
            let b = &self.poses[i + 1];
            let (abx, aby) = (b.x - a.x, b.y - a.y);
            let len2 = abx * abx + aby * aby;
            let t = if len2 > 0.0 {
                (((x - a.x) * abx + (y - a.y) * aby) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let px = a.x + t * abx;
            let py = a.y + t * aby;
            let d2 = (x - px).powi(2) + (y - py).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best_s = self.cum_s[i] + t * (self.cum_s[i + 1] - self.cum_s[i]);
            }
        }
        if self.poses.len() == 1 {
            0.0
        } else {
            best_s
        }
    }

    /// Position interpolated at arc length `s` (clamped to the segment).
    fn point_at(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, self.length());
        match self.cum_s.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => (self.poses[i].x, self.poses[i].y),
            Err(i) => {
                let hi = i.min(self.poses.len() - 1);
                let lo = hi - 1;
                let span = self.cum_s[hi] - self.cum_s[lo];
                let t = if span > 0.0 { (s - self.cum_s[lo]) / span } else { 0.0 };
                (
                    self.poses[lo].x + t * (self.poses[hi].x - self.poses[lo].x),
                    self.poses[lo].y + t * (self.poses[hi].y - self.poses[lo].y),
                )
            }
        }
    }
}

/// The full tracking reference: gear segments plus the goal heading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceTrack {
    pub segments: Vec<RefSegment>,
    pub goal_heading: f64,
}

impl ReferenceTrack {
    pub fn new(segments: Vec<RefSegment>, goal_heading: f64) -> Self {
        assert!(!segments.is_empty(), "reference cannot be empty");
        ReferenceTrack { segments, goal_heading }
    }

    /// Single-segment track, mostly for tests and bench scenarios.
    pub fn single(poses: Vec<Pose>, gear: Gear, goal_heading: f64) -> Self {
        ReferenceTrack::new(vec![RefSegment::new(poses, gear)], goal_heading)
    }

    pub fn goal_position(&self) -> (f64, f64) {
        let p = self.segments.last().unwrap().end_pose();
        (p.x, p.y)
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }
}

/// Cost terms of one rollout, reported per tick for the telemetry trace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub effort: f64,
    pub smoothness: f64,
    pub tracking: f64,
    pub heading: f64,
    pub total: f64,
}

/// Speed profile along a segment: cruise with a linear taper to zero at the
/// segment end.
fn profile_speed(cfg: &MpcConfig, seg: &RefSegment, s: f64) -> f64 {
    let cruise = match seg.gear {
        Gear::Forward => cfg.v_cruise_forward,
        Gear::Reverse => cfg.v_cruise_reverse,
    };
    let remaining = (seg.length() - s).max(0.0);
    if cfg.taper_length > 0.0 {
        cruise * (remaining / cfg.taper_length).min(1.0)
    } else {
        cruise
    }
}

/// Simulates `u_seq` from `state` and accumulates the four cost terms over
/// the active segment (`segment_idx`) of the reference.
pub fn rollout_cost_terms(
    state: VehicleState,
    u_seq: &[ControlInput],
    reference: &ReferenceTrack,
    segment_idx: usize,
    cfg: &MpcConfig,
    u_prev: ControlInput,
) -> CostBreakdown {
    let seg = &reference.segments[segment_idx.min(reference.segments.len() - 1)];
    let (goal_x, goal_y) = reference.goal_position();
    let mut s_ref = seg.project(state.x, state.y);
    let mut z = state;
    let mut prev = u_prev;
    let mut out = CostBreakdown::default();
    for u in u_seq {
        let u = u.clamped(&cfg.vehicle);
        // Reference advances at the profile speed along arc length.
        s_ref += profile_speed(cfg, seg, s_ref) * cfg.dt;
        z = step(z, u, cfg.dt, &cfg.vehicle);
        let (dx, dy) = seg.point_at(s_ref);

        out.effort += cfg.w1 * (u.a * u.a + u.delta * u.delta);
        let da = u.a - prev.a;
        let dd = u.delta - prev.delta;
        out.smoothness += cfg.w2 * (da * da + dd * dd);
        let ex = dx - z.x;
        let ey = dy - z.y;
        out.tracking += cfg.w3 * (ex * ex + ey * ey);
        let near_goal = (z.x - goal_x).hypot(z.y - goal_y) < cfg.align_distance;
        if near_goal {
            let epsi = normalize_angle(z.psi - reference.goal_heading);
            out.heading += cfg.w4 * epsi * epsi;
        }
        prev = u;
    }
    out.total = out.effort + out.smoothness + out.tracking + out.heading;
    out
}

/// Total rollout cost; see [`rollout_cost_terms`] for the decomposition.
pub fn rollout_cost(
    state: VehicleState,
    u_seq: &[ControlInput],
    reference: &ReferenceTrack,
    segment_idx: usize,
    cfg: &MpcConfig,
    u_prev: ControlInput,
) -> f64 {
    rollout_cost_terms(state, u_seq, reference, segment_idx, cfg, u_prev).total
}

fn clamp_seq(seq: &mut [ControlInput], params: &VehicleParams) {
    for u in seq.iter_mut() {
        *u = u.clamped(params);
    }
}

/// Central finite-difference gradient of the rollout cost w.r.t. the
/// flattened control sequence.
pub fn rollout_gradient(
    state: VehicleState,
    u_seq: &[ControlInput],
    reference: &ReferenceTrack,
    segment_idx: usize,
    cfg: &MpcConfig,
    u_prev: ControlInput,
) -> Vec<f64> {
    let eps = 1e-6;
    let mut grad = vec![0.0; 2 * u_seq.len()];
    let mut work = u_seq.to_vec();
    for i in 0..u_seq.len() {
        for comp in 0..2 {
            let slot = if comp == 0 { &mut work[i].a } else { &mut work[i].delta };
            let orig = *slot;
            *slot = orig + eps;
            let hi = rollout_cost(state, &work, reference, segment_idx, cfg, u_prev);
            work[i] = u_seq[i];
            let slot = if comp == 0 { &mut work[i].a } else { &mut work[i].delta };
            *slot = orig - eps;
            let lo = rollout_cost(state, &work, reference, segment_idx, cfg, u_prev);
            work[i] = u_seq[i];
            grad[2 * i + comp] = (hi - lo) / (2.0 * eps);
        }
    }
    grad
}

/// Optimizes an N-step control sequence. `warm_start`, when given, seeds the
/// descent (the controller passes its previous solution shifted by one).
/// The result is clamped feasible and never costs more than the zero or
/// hold-previous baselines.
pub fn solve(
    state: VehicleState,
    reference: &ReferenceTrack,
    segment_idx: usize,
    cfg: &MpcConfig,
    u_prev: ControlInput,
    warm_start: Option<&[ControlInput]>,
) -> Vec<ControlInput> {
    let n = cfg.horizon;
    let params = &cfg.vehicle;
    let zero = vec![ControlInput::default(); n];
    let mut hold = vec![u_prev.clamped(params); n];
    clamp_seq(&mut hold, params);

    let mut current = match warm_start {
        Some(w) if w.len() == n => {
            let mut c = w.to_vec();
            clamp_seq(&mut c, params);
            c
        }
        _ => hold.clone(),
    };
    let mut current_cost = rollout_cost(state, &current, reference, segment_idx, cfg, u_prev);

    let mut lr = 0.5;
    for _ in 0..cfg.iterations {
        let grad = rollout_gradient(state, &current, reference, segment_idx, cfg, u_prev);
        let mut improved = false;
        // Backtracking line search along the projected gradient direction.
        let mut trial_lr = lr;
        for _ in 0..8 {
            let mut trial = current.clone();
            for (i, u) in trial.iter_mut().enumerate() {
                u.a -= trial_lr * grad[2 * i];
                u.delta -= trial_lr * grad[2 * i + 1];
            }
            clamp_seq(&mut trial, params);
            let cost = rollout_cost(state, &trial, reference, segment_idx, cfg, u_prev);
            if cost < current_cost - 1e-12 {
                current = trial;
                current_cost = cost;
                improved = true;
                lr = trial_lr * 1.5;
                break;
            }
            trial_lr *= 0.5;
        }
        if !improved {
            lr = trial_lr;
            if lr < 1e-9 {
                break;
            }
        }
    }

    // Baseline dominance: the zero and hold-previous sequences are always
    // candidates, so the returned cost can never exceed either.
    let zero_cost = rollout_cost(state, &zero, reference, segment_idx, cfg, u_prev);
    let hold_cost = rollout_cost(state, &hold, reference, segment_idx, cfg, u_prev);
    if zero_cost < current_cost {
        current = zero;
        current_cost = zero_cost;
    }
    if hold_cost < current_cost {
        current = hold;
    }
    current
}

/// Stateful receding-horizon wrapper: owns the warm start, the previously
/// applied command and the active gear segment.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub cfg: MpcConfig,
    u_prev: ControlInput,
    warm: Vec<ControlInput>,
    segment_idx: usize,
    /// Vehicle must be this close to the segment end to hand over.
    switch_pos_tol: f64,
    switch_speed_tol: f64,
}

impl MpcController {
    pub fn new(cfg: MpcConfig) -> Self {
        let n = cfg.horizon;
        MpcController {
            cfg,
            u_prev: ControlInput::default(),
            warm: vec![ControlInput::default(); n],
            segment_idx: 0,
            switch_pos_tol: 0.75,
            switch_speed_tol: 0.1,
        }
    }

    pub fn segment_idx(&self) -> usize {
        self.segment_idx
    }

    /// Advances to the next gear segment once the car has settled near the
    /// current segment's end, bringing v through zero before the flip.
    fn maybe_switch_segment(&mut self, state: &VehicleState, reference: &ReferenceTrack) {
        while self.segment_idx + 1 < reference.segments.len() {
            let seg = &reference.segments[self.segment_idx];
            let end = seg.end_pose();
            let close = (state.x - end.x).hypot(state.y - end.y) < self.switch_pos_tol;
            if close && state.v.abs() < self.switch_speed_tol {
                self.segment_idx += 1;
                self.warm = vec![ControlInput::default(); self.cfg.horizon];
            } else {
                break;
            }
        }
    }

    /// One control tick: optimize, apply the first command, keep the rest as
    /// next tick's warm start. Also returns the predicted cost terms.
    pub fn tick(&mut self, state: VehicleState, reference: &ReferenceTrack) -> (ControlInput, CostBreakdown) {
        self.maybe_switch_segment(&state, reference);
        let seq = solve(
            state,
            reference,
            self.segment_idx,
            &self.cfg,
            self.u_prev,
            Some(&self.warm),
        );
        let terms = rollout_cost_terms(state, &seq, reference, self.segment_idx, &self.cfg, self.u_prev);
        let command = seq[0].clamped(&self.cfg.vehicle);
        // Shift for the warm start; repeat the tail command.
        self.warm = seq[1..].to_vec();
        self.warm.push(*seq.last().unwrap());
        self.u_prev = command;
        (command, terms)
    }
}
