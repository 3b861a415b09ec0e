//! Grid-based automated valet parking toolkit.
//!
//! The crate is organised around a planning pipeline for parking a
//! kinematic-bicycle vehicle on a binary occupancy grid:
//!
//! 1. [`map_io`] loads the grid from text or PGM files.
//! 2. [`parking_geom`] synthesises the reverse-in parking maneuver from
//!    Ackermann geometry and emits the pose where the approach path must
//!    deliver the car.
//! 3. [`search`] plans the approach with a configurable A* (weighted
//!    heuristic, binary-heap open list, bidirectional search, optional
//!    sixteen-neighborhood) over the lazily inflated [`clearance`] matrix.
//! 4. [`smoothing`] fits a clamped B-spline over the grid path and blends
//!    segment junctions with quadratic Beziers.
//! 5. [`mpc`] tracks the combined reference with a receding-horizon
//!    controller, simulated by [`sim`] which also collects run metrics.
//!
//! [`metrics`] holds the reference implementations (Dijkstra, flood fill,
//! trace aggregation) used to validate the production planners.

pub mod clearance;
pub mod config;
pub mod map_io;
pub mod metrics;
pub mod mpc;
pub mod parking_geom;
pub mod search;
pub mod sim;
pub mod smoothing;
pub mod vehicle;

pub use map_io::{Cell, OccupancyGrid};
pub use vehicle::{ControlInput, Pose, VehicleParams, VehicleState};
