//! Core domain types: instances, cost parameters, distance matrices,
//! drone deliveries and solutions.
//!
//! Node ids follow the usual TSP-D convention: `0` is the depot as a start
//! point, `1..=n` are customers and `n + 1` is the depot again as the return
//! point. Node `n + 1` is a real index in every matrix, with the depot's
//! coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("instance must have at least one customer")]
    NoCustomers,
    #[error("non-finite coordinate at node {0}")]
    NonFiniteCoordinate(NodeId),
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("drone-eligible node {0} is not a customer")]
    EligibleNotCustomer(NodeId),
    #[error("area must be positive, got {0}")]
    InvalidArea(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Manhattan,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: Point, b: Point) -> f64 {
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        match self {
            Metric::Manhattan => dx.abs() + dy.abs(),
            Metric::Euclidean => dx.hypot(dy),
        }
    }
}

/// Which quantity a solver minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Transportation cost of both vehicles plus waiting penalties.
    MinCost,
    /// Time at which the later vehicle is back at the depot.
    MinTime,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::MinCost => "min_cost",
            Objective::MinTime => "min_time",
        })
    }
}

/// Cost, speed and timing parameters of an instance.
///
/// Distances are kilometres, speeds km/h and every time is in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Truck cost per km (C1).
    pub truck_cost: f64,
    /// Drone cost per km (C2).
    pub drone_cost: f64,
    /// Truck waiting fee per minute (alpha).
    pub truck_wait_fee: f64,
    /// Drone waiting fee per minute (beta).
    pub drone_wait_fee: f64,
    pub launch_time: f64,
    pub retrieve_time: f64,
    /// Maximum flight minutes of one sortie.
    pub endurance: f64,
    pub truck_speed: f64,
    pub drone_speed: f64,
    pub truck_metric: Metric,
    pub drone_metric: Metric,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            truck_cost: 25.0,
            drone_cost: 1.0,
            truck_wait_fee: 10.0,
            drone_wait_fee: 10.0,
            launch_time: 1.0,
            retrieve_time: 1.0,
            endurance: 20.0,
            truck_speed: 40.0,
            drone_speed: 40.0,
            truck_metric: Metric::Manhattan,
            drone_metric: Metric::Euclidean,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let non_negative = [
            ("truck_cost", self.truck_cost),
            ("drone_cost", self.drone_cost),
            ("truck_wait_fee", self.truck_wait_fee),
            ("drone_wait_fee", self.drone_wait_fee),
            ("launch_time", self.launch_time),
            ("retrieve_time", self.retrieve_time),
            ("endurance", self.endurance),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("truck_speed", self.truck_speed), ("drone_speed", self.drone_speed)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Dense `(n + 2) x (n + 2)` distance and travel-time matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrices {
    size: usize,
    truck_dist: Vec<f64>,
    drone_dist: Vec<f64>,
    truck_time: Vec<f64>,
    drone_time: Vec<f64>,
}

impl Matrices {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn truck_dist(&self, i: NodeId, j: NodeId) -> f64 {
        self.truck_dist[i * self.size + j]
    }

    #[inline]
    pub fn drone_dist(&self, i: NodeId, j: NodeId) -> f64 {
        self.drone_dist[i * self.size + j]
    }

    /// Truck travel minutes.
    #[inline]
    pub fn truck_time(&self, i: NodeId, j: NodeId) -> f64 {
        self.truck_time[i * self.size + j]
    }

    /// Drone travel minutes.
    #[inline]
    pub fn drone_time(&self, i: NodeId, j: NodeId) -> f64 {
        self.drone_time[i * self.size + j]
    }
}

/// Builds the matrices for `points` (depot first); the depot row is
/// duplicated as node `points.len()`.
pub fn build_matrices(points: &[Point], params: &CostParams) -> Matrices {
    let size = points.len() + 1;
    let at = |v: NodeId| if v == size - 1 { points[0] } else { points[v] };
    let mut m = Matrices {
        size,
        truck_dist: vec![0.0; size * size],
        drone_dist: vec![0.0; size * size],
        truck_time: vec![0.0; size * size],
        drone_time: vec![0.0; size * size],
    };
    for i in 0..size {
        for j in 0..size {
            let idx = i * size + j;
            let d = params.truck_metric.distance(at(i), at(j));
            let dd = params.drone_metric.distance(at(i), at(j));
            m.truck_dist[idx] = d;
            m.drone_dist[idx] = dd;
            m.truck_time[idx] = d / params.truck_speed * 60.0;
            m.drone_time[idx] = dd / params.drone_speed * 60.0;
        }
    }
    m
}

/// A sortie: launch at `launch`, serve `customer` by drone, rejoin the truck
/// at `rendezvous`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneDelivery {
    pub launch: NodeId,
    pub customer: NodeId,
    pub rendezvous: NodeId,
}

impl DroneDelivery {
    pub const fn new(launch: NodeId, customer: NodeId, rendezvous: NodeId) -> Self {
        Self {
            launch,
            customer,
            rendezvous,
        }
    }
}

/// A TSP-D instance with its derived matrices.
#[derive(Clone, Debug)]
pub struct Instance {
    id: String,
    area: f64,
    points: Vec<Point>,
    eligible: Vec<bool>,
    params: CostParams,
    matrices: Matrices,
}

impl Instance {
    /// `points[0]` is the depot, `points[1..]` the customers.
    pub fn new(
        id: impl Into<String>,
        area: f64,
        points: Vec<Point>,
        drone_eligible: impl IntoIterator<Item = NodeId>,
        params: CostParams,
    ) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::NoCustomers);
        }
        if !(area.is_finite() && area > 0.0) {
            return Err(ModelError::InvalidArea(area));
        }
        if let Some(v) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(ModelError::NonFiniteCoordinate(v));
        }
        params.validate()?;
        let n = points.len() - 1;
        let mut eligible = vec![false; n + 2];
        for j in drone_eligible {
            if j == 0 || j > n {
                return Err(ModelError::EligibleNotCustomer(j));
            }
            eligible[j] = true;
        }
        let matrices = build_matrices(&points, &params);
        Ok(Self {
            id: id.into(),
            area,
            points,
            eligible,
            params,
            matrices,
        })
    }

    /// Same customers and eligibility under different parameters.
    pub fn with_params(&self, params: CostParams) -> Result<Self, ModelError> {
        Self::new(self.id.clone(), self.area, self.points.clone(), self.drone_eligible(), params)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Number of customers.
    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    /// Id of the return depot, `n + 1`.
    pub fn end_depot(&self) -> NodeId {
        self.points.len()
    }

    /// Total node count including both depot copies.
    pub fn node_count(&self) -> usize {
        self.points.len() + 1
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<NodeId> {
        1..=self.n()
    }

    pub fn is_customer(&self, v: NodeId) -> bool {
        v >= 1 && v <= self.n()
    }

    pub fn is_depot(&self, v: NodeId) -> bool {
        v == 0 || v == self.end_depot()
    }

    /// Coordinates of the `n + 1` distinct locations, depot first.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, v: NodeId) -> Point {
        if v == self.end_depot() {
            self.points[0]
        } else {
            self.points[v]
        }
    }

    pub fn is_drone_eligible(&self, v: NodeId) -> bool {
        self.eligible.get(v).copied().unwrap_or(false)
    }

    pub fn drone_eligible(&self) -> Vec<NodeId> {
        self.customers().filter(|&j| self.eligible[j]).collect()
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn matrices(&self) -> &Matrices {
        &self.matrices
    }

    /// Drone flight minutes of `i -> j -> k`.
    #[inline]
    pub fn flight_time(&self, i: NodeId, j: NodeId, k: NodeId) -> f64 {
        self.matrices.drone_time(i, j) + self.matrices.drone_time(j, k)
    }

    /// Membership in the set of endurance-feasible deliveries.
    ///
    /// The launch may be the start depot and the rendezvous the return depot,
    /// but not both at once: a sortie launched at the depot must rejoin the
    /// truck at a customer.
    pub fn is_feasible_delivery(&self, i: NodeId, j: NodeId, k: NodeId) -> bool {
        let end = self.end_depot();
        if i >= end || k == 0 || k > end {
            return false;
        }
        if i == j || j == k || k == i || (i == 0 && k == end) {
            return false;
        }
        self.is_drone_eligible(j) && self.flight_time(i, j, k) <= self.params.endurance
    }
}

/// Every endurance-feasible delivery, in lexicographic `(i, j, k)` order.
pub fn enumerate_feasible_deliveries(instance: &Instance) -> Vec<DroneDelivery> {
    let end = instance.end_depot();
    let mut out = Vec::new();
    for i in 0..end {
        for j in instance.drone_eligible() {
            for k in 1..=end {
                if instance.is_feasible_delivery(i, j, k) {
                    out.push(DroneDelivery::new(i, j, k));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// A TSP-D solution: the truck tour and the set of drone deliveries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub truck_tour: Vec<NodeId>,
    pub deliveries: Vec<DroneDelivery>,
}

impl Solution {
    pub fn new(truck_tour: Vec<NodeId>, mut deliveries: Vec<DroneDelivery>) -> Self {
        deliveries.sort_unstable();
        Self { truck_tour, deliveries }
    }

    pub fn truck_only(truck_tour: Vec<NodeId>) -> Self {
        Self {
            truck_tour,
            deliveries: Vec::new(),
        }
    }

    pub fn drone_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.deliveries.iter().map(|d| d.customer)
    }
}
