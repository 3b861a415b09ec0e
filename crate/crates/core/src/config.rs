//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment. Keys cover the vehicle,
//! planner and controller parameters plus the simulation knobs; unknown
//! keys are rejected so typos do not silently fall back to defaults.
//! Precedence is CLI flag over file over built-in default; the merged
//! configuration is echoed into every JSON report.

use std::collections::BTreeMap;

use crate::clearance::ClearanceMode;
use crate::search::{HeuristicKind, Neighborhood, SmoothingMode};
use crate::sim::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {key}: {msg}")]
    BadValue { key: String, msg: String },
}

/// Parses the key-value document; later assignments win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        msg: format!("expected a number, got {value:?}"),
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        msg: format!("expected an integer, got {value:?}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            msg: format!("expected a boolean, got {value:?}"),
        }),
    }
}

/// Applies a parsed key-value map onto a scenario.
pub fn apply_to_scenario(sc: &mut Scenario, kv: &BTreeMap<String, String>) -> Result<(), ConfigError> {
    for (key, value) in kv {
        apply_one(sc, key, value)?;
    }
    sc.mpc.vehicle = sc.vehicle;
    Ok(())
}

/// Sets a single configuration key on the scenario.
pub fn apply_one(sc: &mut Scenario, key: &str, value: &str) -> Result<(), ConfigError> {
    match key {
        // vehicle
        "wheelbase" => sc.vehicle.wheelbase = parse_f64(key, value)?,
        "track" => sc.vehicle.track = parse_f64(key, value)?,
        "body_length" => sc.vehicle.body_length = parse_f64(key, value)?,
        "body_width" => sc.vehicle.body_width = parse_f64(key, value)?,
        "delta_max_deg" => sc.vehicle.delta_max = parse_f64(key, value)?.to_radians(),
        "a_min" => sc.vehicle.a_min = parse_f64(key, value)?,
        "a_max" => sc.vehicle.a_max = parse_f64(key, value)?,
        "v_max" => sc.vehicle.v_max = parse_f64(key, value)?,
        // planner
        "w_far" => sc.planner.w_far = parse_f64(key, value)?,
        "w_near" => sc.planner.w_near = parse_f64(key, value)?,
        "switch_distance" => sc.planner.switch_distance = parse_f64(key, value)?,
        "tie_break_p" => sc.planner.tie_break_p = parse_f64(key, value)?,
        "neighborhood" => {
            sc.planner.neighborhood = match value {
                "eight" | "8" => Neighborhood::Eight,
                "sixteen" | "16" => Neighborhood::Sixteen,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        msg: format!("expected eight|sixteen, got {value:?}"),
                    })
                }
            }
        }
        "heap" => sc.planner.use_binary_heap = parse_bool(key, value)?,
        "bidirectional" => sc.planner.bidirectional = parse_bool(key, value)?,
        "clearance" => {
            sc.planner.use_clearance = match value {
                "lazy" => ClearanceMode::Lazy,
                "eager" => ClearanceMode::Eager,
                "off" => ClearanceMode::Off,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        msg: format!("expected lazy|eager|off, got {value:?}"),
                    })
                }
            }
        }
        "smoothing" => {
            sc.planner.smoothing = match value {
                "bspline" => SmoothingMode::Bspline,
                "off" => SmoothingMode::Off,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        msg: format!("expected bspline|off, got {value:?}"),
                    })
                }
            }
        }
        "heuristic" => {
            sc.planner.heuristic = match value {
                "euclidean" => HeuristicKind::Euclidean,
                "manhattan" => HeuristicKind::Manhattan,
                "diagonal" => HeuristicKind::Diagonal,
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        msg: format!("expected euclidean|manhattan|diagonal, got {value:?}"),
                    })
                }
            }
        }
        // controller
        "horizon" => sc.mpc.horizon = parse_usize(key, value)?,
        "mpc_dt" => sc.mpc.dt = parse_f64(key, value)?,
        "w1" => sc.mpc.w1 = parse_f64(key, value)?,
        "w2" => sc.mpc.w2 = parse_f64(key, value)?,
        "w3" => sc.mpc.w3 = parse_f64(key, value)?,
        "w4" => sc.mpc.w4 = parse_f64(key, value)?,
        "align_distance" => sc.mpc.align_distance = parse_f64(key, value)?,
        "iterations" => sc.mpc.iterations = parse_usize(key, value)?,
        "v_cruise_forward" => sc.mpc.v_cruise_forward = parse_f64(key, value)?,
        "v_cruise_reverse" => sc.mpc.v_cruise_reverse = parse_f64(key, value)?,
        "taper_length" => sc.mpc.taper_length = parse_f64(key, value)?,
        // spot and simulation
        "spot_length" => sc.parking.spot_length = parse_f64(key, value)?,
        "spot_width" => sc.parking.spot_width = parse_f64(key, value)?,
        "clearance_margin" => sc.clearance_margin = parse_f64(key, value)?,
        "tick_budget" => sc.tick_budget = parse_usize(key, value)?,
        other => return Err(ConfigError::UnknownKey(other.to_string())),
    }
    sc.mpc.vehicle = sc.vehicle;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_io::Cell;
    use crate::parking_geom::{ParkingKind, ParkingSpec};

    fn scenario() -> Scenario {
        Scenario::new(
            "maps/vertical.txt",
            Cell::new(0, 0),
            ParkingSpec {
                center: Cell::new(10, 10),
                spot_heading: 0.0,
                kind: ParkingKind::Perpendicular,
                spot_length: 8.0,
                spot_width: 5.0,
            },
        )
    }

    #[test]
    fn parses_comments_and_overrides() {
        let kv = parse_kv("# comment\nw_far = 2.0\n\nheap = off # trailing\nw_far = 1.25\n").unwrap();
        assert_eq!(kv["w_far"], "1.25");
        let mut sc = scenario();
        apply_to_scenario(&mut sc, &kv).unwrap();
        assert_eq!(sc.planner.w_far, 1.25);
        assert!(!sc.planner.use_binary_heap);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut sc = scenario();
        assert!(matches!(
            apply_one(&mut sc, "warp_drive", "on"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            apply_one(&mut sc, "w_far", "fast"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            parse_kv("w_far 2.0"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn vehicle_keys_propagate_to_mpc() {
        let mut sc = scenario();
        apply_one(&mut sc, "delta_max_deg", "20").unwrap();
        assert!((sc.vehicle.delta_max - 20.0_f64.to_radians()).abs() < 1e-12);
        assert_eq!(sc.mpc.vehicle.delta_max, sc.vehicle.delta_max);
    }

    #[test]
    fn enum_keys() {
        let mut sc = scenario();
        apply_one(&mut sc, "clearance", "eager").unwrap();
        assert_eq!(sc.planner.use_clearance, ClearanceMode::Eager);
        apply_one(&mut sc, "neighborhood", "sixteen").unwrap();
        assert_eq!(sc.planner.neighborhood, Neighborhood::Sixteen);
        apply_one(&mut sc, "heuristic", "manhattan").unwrap();
        assert_eq!(sc.planner.heuristic, HeuristicKind::Manhattan);
        assert!(apply_one(&mut sc, "smoothing", "quintic").is_err());
    }
}
