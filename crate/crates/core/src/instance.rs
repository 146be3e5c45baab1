//! Random instance generation and JSON files for instances and solutions.
//!
//! Generation uses ChaCha8 seeded with `seed_from_u64(seed)`: for each
//! customer in order draw `x` then `y` as `gen::<f64>() * sqrt(area)`, then
//! pick the drone-eligible customers by a partial Fisher-Yates shuffle of
//! `1..=n` driven by `gen_range`. The depot sits at the origin.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, Evaluation, Violations};
use crate::model::{CostParams, DroneDelivery, Instance, ModelError, NodeId, Objective, Point, Solution};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("drone-eligible fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("need at least one customer")]
    NoCustomers,
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("file declares n = {declared} but lists {actual} customers")]
    CountMismatch { declared: usize, actual: usize },
    #[error("solution belongs to instance `{found}`, expected `{expected}`")]
    WrongInstance { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solution is infeasible: {0}")]
    Infeasible(#[from] Violations),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for InstanceError {
    fn from(e: serde_json::Error) -> Self {
        let msg = e.to_string();
        if let Some(rest) = msg.strip_prefix("missing field `") {
            if let Some(end) = rest.find('`') {
                return InstanceError::MissingField(rest[..end].to_string());
            }
        }
        InstanceError::Parse(msg)
    }
}

/// Draws a random instance.
pub fn generate(
    id: impl Into<String>,
    n: usize,
    area: f64,
    drone_eligible_fraction: f64,
    seed: u64,
    params: CostParams,
) -> Result<Instance, InstanceError> {
    if !(0.0..=1.0).contains(&drone_eligible_fraction) {
        return Err(InstanceError::BadFraction(drone_eligible_fraction));
    }
    if n == 0 {
        return Err(InstanceError::NoCustomers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = area.sqrt();
    let mut points = vec![Point::new(0.0, 0.0)];
    for _ in 0..n {
        let x = rng.gen::<f64>() * side;
        let y = rng.gen::<f64>() * side;
        points.push(Point::new(x, y));
    }
    let count = (drone_eligible_fraction * n as f64).round() as usize;
    let mut ids: Vec<NodeId> = (1..=n).collect();
    for i in 0..count {
        let j = rng.gen_range(i..n);
        ids.swap(i, j);
    }
    let mut eligible = ids[..count].to_vec();
    eligible.sort_unstable();
    Ok(Instance::new(id, area, points, eligible, params)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomerRecord {
    x: f64,
    y: f64,
    drone_eligible: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    id: String,
    n: usize,
    area: f64,
    params: CostParams,
    depot: Point,
    customers: Vec<CustomerRecord>,
}

pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        id: instance.id().to_string(),
        n: instance.n(),
        area: instance.area(),
        params: *instance.params(),
        depot: instance.point(0),
        customers: instance
            .customers()
            .map(|v| {
                let p = instance.point(v);
                CustomerRecord {
                    x: p.x,
                    y: p.y,
                    drone_eligible: instance.is_drone_eligible(v),
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("instance serializes") + "\n"
}

pub fn instance_from_json(text: &str) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.n != file.customers.len() {
        return Err(InstanceError::CountMismatch {
            declared: file.n,
            actual: file.customers.len(),
        });
    }
    let mut points = vec![file.depot];
    points.extend(file.customers.iter().map(|c| Point::new(c.x, c.y)));
    let eligible: Vec<NodeId> = file
        .customers
        .iter()
        .enumerate()
        .filter(|(_, c)| c.drone_eligible)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(Instance::new(file.id, file.area, points, eligible, file.params)?)
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, instance_to_json(instance))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, InstanceError> {
    instance_from_json(&fs::read_to_string(path)?)
}

/// Cost breakdown stored with a solution. It can always be recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBlock {
    pub total_cost: f64,
    pub completion_time: f64,
    pub truck_transport_cost: f64,
    pub drone_transport_cost: f64,
    pub truck_waiting_cost: f64,
    pub drone_waiting_cost: f64,
    pub truck_waiting_time: f64,
    pub drone_waiting_time: f64,
}

impl From<&Evaluation> for CostBlock {
    fn from(ev: &Evaluation) -> Self {
        Self {
            total_cost: ev.total_cost,
            completion_time: ev.completion_time,
            truck_transport_cost: ev.truck_transport_cost,
            drone_transport_cost: ev.drone_transport_cost,
            truck_waiting_cost: ev.truck_waiting_cost,
            drone_waiting_cost: ev.drone_waiting_cost,
            truck_waiting_time: ev.truck_waiting_time,
            drone_waiting_time: ev.drone_waiting_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub instance_id: String,
    pub objective_kind: Objective,
    pub truck_tour: Vec<NodeId>,
    pub deliveries: Vec<DroneDelivery>,
    pub costs: CostBlock,
}

impl SolutionFile {
    pub fn new(instance: &Instance, objective: Objective, solution: &Solution, evaluation: &Evaluation) -> Self {
        Self {
            instance_id: instance.id().to_string(),
            objective_kind: objective,
            truck_tour: solution.truck_tour.clone(),
            deliveries: solution.deliveries.clone(),
            costs: evaluation.into(),
        }
    }

    pub fn solution(&self) -> Solution {
        Solution::new(self.truck_tour.clone(), self.deliveries.clone())
    }
}

pub fn solution_to_json(file: &SolutionFile) -> String {
    serde_json::to_string_pretty(file).expect("solution serializes") + "\n"
}

pub fn solution_from_json(text: &str) -> Result<SolutionFile, InstanceError> {
    Ok(serde_json::from_str(text)?)
}

pub fn save_solution(
    path: &Path,
    instance: &Instance,
    objective: Objective,
    solution: &Solution,
    evaluation: &Evaluation,
) -> Result<(), InstanceError> {
    fs::write(
        path,
        solution_to_json(&SolutionFile::new(instance, objective, solution, evaluation)),
    )?;
    Ok(())
}

/// Loads a solution file and re-validates it against `instance`.
pub fn load_solution(path: &Path, instance: &Instance) -> Result<(Solution, Evaluation), InstanceError> {
    let file = solution_from_json(&fs::read_to_string(path)?)?;
    if file.instance_id != instance.id() {
        return Err(InstanceError::WrongInstance {
            expected: instance.id().to_string(),
            found: file.instance_id,
        });
    }
    let sol = file.solution();
    let ev = evaluate(instance, &sol)?;
    Ok((sol, ev))
}
