//! Bezier evaluation, clamped B-spline path smoothing and junction blending.
//!
//! `smooth_path` subsamples the grid path into control points, fits a
//! clamped uniform B-spline (so the curve interpolates both endpoints) and
//! resamples it at fixed arc-length spacing. `smooth_junction` replaces a
//! small window around a segment joint with one quadratic Bezier so the
//! concatenation stays heading-continuous.

use serde::{Deserialize, Serialize};

use crate::map_io::Cell;
use crate::vehicle::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineConfig {
    /// Spline degree.
    pub degree: usize,
    /// Every n-th raw cell becomes a control point (endpoints always kept).
    pub sample_stride: usize,
    /// Arc-length spacing of emitted poses, cells.
    pub output_spacing: f64,
}

impl Default for SplineConfig {
    fn default() -> Self {
        SplineConfig { degree: 3, sample_stride: 3, output_spacing: 0.25 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SmoothingError {
    #[error("need at least 2 points, got {0}")]
    DegenerateInput(usize),
    #[error("segment gap {0:.3} cells exceeds 1 cell")]
    GapTooLarge(f64),
}

/// Evaluates a Bezier curve at `t` via the Bernstein-basis sum
/// `P(t) = sum_i P_i C(n,i) t^i (1-t)^(n-i)`.
pub fn bezier_point(control: &[(f64, f64)], t: f64) -> Result<(f64, f64), SmoothingError> {
    if control.len() < 2 {
        return Err(SmoothingError::DegenerateInput(control.len()));
    }
    let n = control.len() - 1;
    let mut x = 0.0;
    let mut y = 0.0;
    let mut coeff = 1.0_f64; // C(n, i), updated incrementally
    for (i, p) in control.iter().enumerate() {
        let b = coeff * t.powi(i as i32) * (1.0 - t).powi((n - i) as i32);
        x += b * p.0;
        y += b * p.1;
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    Ok((x, y))
}

/// Cox-de Boor recursion for the B-spline basis `B_{i,k}` over `knots`;
/// 0/0 terms are defined as 0.
pub fn bspline_basis(i: usize, k: usize, t: f64, knots: &[f64]) -> f64 {
    if k == 0 {
        // Half-open support, except the last span which closes the domain.
        let closes_domain = i + 2 >= knots.len() || (t >= knots[i] && knots[i + 1] == *knots.last().unwrap());
        if (t >= knots[i] && t < knots[i + 1]) || (closes_domain && t == knots[i + 1]) {
            return 1.0;
        }
        return 0.0;
    }
    let mut value = 0.0;
    let denom_left = knots[i + k] - knots[i];
    if denom_left > 0.0 {
        value += (t - knots[i]) / denom_left * bspline_basis(i, k - 1, t, knots);
    }
    let denom_right = knots[i + k + 1] - knots[i + 1];
    if denom_right > 0.0 {
        value += (knots[i + k + 1] - t) / denom_right * bspline_basis(i + 1, k - 1, t, knots);
    }
    value
}

/// Clamped uniform knot vector for `n_ctrl` control points of `degree`:
/// first and last knots repeated `degree + 1` times, interior uniform,
/// normalized to `[0, 1]`.
pub fn clamped_knots(n_ctrl: usize, degree: usize) -> Vec<f64> {
    let spans = n_ctrl - degree; // interior spans + 1
    let mut knots = Vec::with_capacity(n_ctrl + degree + 1);
    for _ in 0..=degree {
        knots.push(0.0);
    }
    for j in 1..spans {
        knots.push(j as f64 / spans as f64);
    }
    for _ in 0..=degree {
        knots.push(1.0);
    }
    knots
}

fn de_boor_eval(control: &[(f64, f64)], degree: usize, knots: &[f64], t: f64) -> (f64, f64) {
    let mut x = 0.0;
    let mut y = 0.0;
    for (i, p) in control.iter().enumerate() {
        let b = bspline_basis(i, degree, t, knots);
        x += b * p.0;
        y += b * p.1;
    }
    (x, y)
}

/// Resamples a dense polyline at even arc-length spacing and attaches
/// tangent headings.
fn resample_with_headings(dense: &[(f64, f64)], spacing: f64) -> Vec<Pose> {
    let mut cum = Vec::with_capacity(dense.len());
    let mut s = 0.0;
    cum.push(0.0);
    for w in dense.windows(2) {
        s += (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        cum.push(s);
    }
    let total = s;
    let n_out = (total / spacing).ceil().max(1.0) as usize;
    let mut pts = Vec::with_capacity(n_out + 1);
    let mut j = 0;
    for i in 0..=n_out {
        let target = total * i as f64 / n_out as f64;
        while j + 1 < cum.len() && cum[j + 1] < target {
            j += 1;
        }
        if j + 1 >= dense.len() {
            pts.push(dense[dense.len() - 1]);
            continue;
        }
        let seg = cum[j + 1] - cum[j];
        let frac = if seg > 0.0 { (target - cum[j]) / seg } else { 0.0 };
        pts.push((
            dense[j].0 + frac * (dense[j + 1].0 - dense[j].0),
            dense[j].1 + frac * (dense[j + 1].1 - dense[j].1),
        ));
    }
    let mut poses = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let (from, to) = if i + 1 < pts.len() {
            (pts[i], pts[i + 1])
        } else {
            (pts[i - 1], pts[i])
        };
        let psi = (to.1 - from.1).atan2(to.0 - from.0);
        poses.push(Pose::new(pts[i].0, pts[i].1, psi));
    }
    poses
}

/// Smooths a grid path: stride-subsampled control points, clamped B-spline,
/// arc-length resampling with tangent headings.
pub fn smooth_path(raw: &[Cell], cfg: &SplineConfig) -> Result<Vec<Pose>, SmoothingError> {
    if raw.len() < 2 {
        return Err(SmoothingError::DegenerateInput(raw.len()));
    }
    let stride = cfg.sample_stride.max(1);
    let mut control: Vec<(f64, f64)> = Vec::new();
    for (i, c) in raw.iter().enumerate() {
        if i % stride == 0 {
            control.push((f64::from(c.x), f64::from(c.y)));
        }
    }
    let last = raw[raw.len() - 1];
    if control.last() != Some(&(f64::from(last.x), f64::from(last.y))) {
        control.push((f64::from(last.x), f64::from(last.y)));
    }
    // Not enough control points for the requested degree: drop the degree so
    // short paths still smooth instead of erroring.
    let degree = cfg.degree.max(1).min(control.len() - 1);
    let knots = clamped_knots(control.len(), degree);
    let dense_n = (control.len() * 16).max(64);
    let mut dense = Vec::with_capacity(dense_n + 1);
    for i in 0..=dense_n {
        let t = i as f64 / dense_n as f64;
        dense.push(de_boor_eval(&control, degree, &knots, t));
    }
    Ok(resample_with_headings(&dense, cfg.output_spacing))
}

/// Largest joint window `smooth_junction` will try, in poses per side.
const JUNCTION_WINDOW_CAP: usize = 48;

/// Blends the joint between two pose lists with a single quadratic Bezier
/// whose control point is the intersection of the end tangents. The window
/// grows until the blend's heading steps respect what `turn_radius` allows
/// per sample, so sharp joints get long gentle blends while collinear
/// segments degenerate to the plain concatenation.
pub fn smooth_junction(
    seg_a: &[Pose],
    seg_b: &[Pose],
    turn_radius: f64,
) -> Result<Vec<Pose>, SmoothingError> {
    if seg_a.len() < 2 || seg_b.len() < 2 {
        return Err(SmoothingError::DegenerateInput(seg_a.len().min(seg_b.len())));
    }
    let gap = seg_a[seg_a.len() - 1].distance(&seg_b[0]);
    if gap > 1.0 {
        return Err(SmoothingError::GapTooLarge(gap));
    }
    let spacing = estimate_spacing(seg_a).min(estimate_spacing(seg_b));
    let step_bound = spacing / turn_radius.max(1e-6) * 1.10 + 1e-9;
    let cap = JUNCTION_WINDOW_CAP
        .min(seg_a.len() - 1)
        .min(seg_b.len() - 1);
    let mut best: Option<(f64, Vec<Pose>)> = None;
    for w in 1..=cap {
        let (candidate, blend_start, blend_end) = blend_window(seg_a, seg_b, w, spacing);
        let lo = blend_start.saturating_sub(1);
        let hi = (blend_end + 1).min(candidate.len());
        let worst = candidate[lo..hi]
            .windows(2)
            .map(|w| crate::vehicle::normalize_angle(w[1].psi - w[0].psi).abs())
            .fold(0.0, f64::max);
        if worst <= step_bound {
            return Ok(candidate);
        }
        if best.as_ref().map_or(true, |(s, _)| worst < *s) {
            best = Some((worst, candidate));
        }
    }
    Ok(best.expect("cap >= 1").1)
}

fn blend_window(
    seg_a: &[Pose],
    seg_b: &[Pose],
    w: usize,
    spacing: f64,
) -> (Vec<Pose>, usize, usize) {
    let a = seg_a[seg_a.len() - 1 - w];
    let b = seg_b[w];
    let head: Vec<Pose> = seg_a[..seg_a.len() - w].to_vec();
    let tail: Vec<Pose> = seg_b[w..].to_vec();

    // Tangent-ray intersection; near-parallel rays fall back to the chord
    // midpoint, which collapses the Bezier onto the straight chord.
    let (da, db) = ((a.psi.cos(), a.psi.sin()), (b.psi.cos(), b.psi.sin()));
    let det = da.0 * (-db.1) - (-db.0) * da.1;
    let rx = b.x - a.x;
    let ry = b.y - a.y;
    let chord = rx.hypot(ry);
    let mut ctrl = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    if det.abs() > 1e-9 {
        let s = (rx * (-db.1) - (-db.0) * ry) / det;
        if s > 0.0 && s < 4.0 * chord.max(1.0) {
            ctrl = (a.x + s * da.0, a.y + s * da.1);
        }
    }

    let control = [(a.x, a.y), ctrl, (b.x, b.y)];
    let dense_n = 64;
    let mut dense = Vec::with_capacity(dense_n + 1);
    for i in 0..=dense_n {
        let t = i as f64 / dense_n as f64;
        dense.push(bezier_point(&control, t).expect("quadratic control set"));
    }
    let blend = resample_with_headings(&dense, spacing);

    let mut out = head;
    let blend_start = out.len();
    out.extend(blend);
    let blend_end = out.len();
    out.extend(tail.into_iter().skip(1));
    (out, blend_start, blend_end)
}

fn estimate_spacing(seg: &[Pose]) -> f64 {
    if seg.len() < 2 {
        return 0.25;
    }
    let total: f64 = seg.windows(2).map(|w| w[0].distance(&w[1])).sum();
    (total / (seg.len() - 1) as f64).max(1e-3)
}
