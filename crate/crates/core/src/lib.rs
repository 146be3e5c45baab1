//! Heuristic and exact solvers for the traveling salesman problem with drone
//! (TSP-D) under the min-cost and min-time objectives.
//!
//! The main entry points are [`grasp::run_grasp`], [`tspls::run_tspls`] and
//! [`split::split`]; [`oracle`] holds brute-force solvers for small instances
//! and [`milp`] maps solutions onto the mixed integer formulation.

pub mod cli;
pub mod construct;
pub mod eval;
pub mod grasp;
pub mod instance;
pub mod localsearch;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod split;
pub mod stats;
pub mod tspls;

pub use eval::{evaluate, validate, Evaluation, Violation};
pub use model::{CostParams, DroneDelivery, Instance, Metric, NodeId, Objective, Point, Solution};
