//! Optimal split of a giant tour into a TSP-D solution.
//!
//! Every pair of tour positions `a < c` becomes an arc of an auxiliary DAG.
//! Adjacent positions cost the plain truck arc; spanning arcs cost the best
//! sortie that launches at `tour[a]`, serves one interior node by drone and
//! rejoins at `tour[c]` while the truck drives the remaining interior nodes.
//! A shortest path from the first to the last position then selects
//! non-interfering sorties.
//!
//! Arc costs use prefix sums along the tour, so building and searching the
//! graph takes O(n^3) time.

use thiserror::Error;

use crate::model::{DroneDelivery, Instance, NodeId, Objective, Solution};

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("giant tour must start at 0, end at {end} and visit every customer exactly once")]
    InvalidTour { end: NodeId },
    #[error("internal error: inconsistent split tables ({0})")]
    Internal(String),
}

/// A finite arc of the auxiliary graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxArc {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: f64,
    pub drone_node: Option<NodeId>,
}

/// Candidate sortie of a spanning arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SortieEntry {
    pub launch: NodeId,
    pub drone_node: NodeId,
    pub rendezvous: NodeId,
    pub cost: f64,
}

/// Shortest-path tables, indexed by node id.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTables {
    pub predecessor: Vec<Option<NodeId>>,
    pub value: Vec<f64>,
    pub sorties: Vec<SortieEntry>,
}

impl SplitTables {
    /// Cost of the best split, the value at the return depot.
    pub fn best_value(&self) -> f64 {
        *self.value.last().expect("tables cover at least two nodes")
    }
}

fn check_tour(tour: &[NodeId], instance: &Instance) -> Result<(), SplitError> {
    let end = instance.end_depot();
    let err = SplitError::InvalidTour { end };
    if tour.len() != instance.node_count() || tour[0] != 0 || tour[tour.len() - 1] != end {
        return Err(err);
    }
    let mut seen = vec![false; instance.node_count()];
    for &v in tour {
        if v >= seen.len() || seen[v] {
            return Err(err);
        }
        seen[v] = true;
    }
    Ok(())
}

/// Cost of the truck arc `u -> v` under `objective`.
#[inline]
pub(crate) fn arc_weight(instance: &Instance, objective: Objective, u: NodeId, v: NodeId) -> f64 {
    let m = instance.matrices();
    match objective {
        Objective::MinCost => instance.params().truck_cost * m.truck_dist(u, v),
        Objective::MinTime => m.truck_time(u, v),
    }
}

/// Truck distance from `tour[a]` to `tour[c]` with the node at position `b`
/// skipped.
pub fn truck_distance_without(instance: &Instance, tour: &[NodeId], a: usize, b: usize, c: usize) -> f64 {
    let m = instance.matrices();
    let full: f64 = tour[a..=c].windows(2).map(|w| m.truck_dist(w[0], w[1])).sum();
    full - m.truck_dist(tour[b - 1], tour[b]) - m.truck_dist(tour[b], tour[b + 1]) + m.truck_dist(tour[b - 1], tour[b + 1])
}

struct Prefix {
    dist: Vec<f64>,
    time: Vec<f64>,
}

impl Prefix {
    fn new(instance: &Instance, tour: &[NodeId]) -> Self {
        let m = instance.matrices();
        let mut dist = vec![0.0; tour.len()];
        let mut time = vec![0.0; tour.len()];
        for p in 1..tour.len() {
            dist[p] = dist[p - 1] + m.truck_dist(tour[p - 1], tour[p]);
            time[p] = time[p - 1] + m.truck_time(tour[p - 1], tour[p]);
        }
        Self { dist, time }
    }
}

/// Best sortie for the spanning arc between positions `a` and `c`, as
/// `(cost, position of the drone node)`.
fn spanning_arc(instance: &Instance, objective: Objective, tour: &[NodeId], prefix: &Prefix, a: usize, c: usize) -> Option<(f64, usize)> {
    let m = instance.matrices();
    let p = instance.params();
    let (i, k) = (tour[a], tour[c]);
    let mut best: Option<(f64, usize)> = None;
    for b in a + 1..c {
        let j = tour[b];
        if !instance.is_feasible_delivery(i, j, k) {
            continue;
        }
        let (prev, next) = (tour[b - 1], tour[b + 1]);
        let truck_time = prefix.time[c] - prefix.time[a] - m.truck_time(prev, j) - m.truck_time(j, next) + m.truck_time(prev, next);
        let drone_time = m.drone_time(i, j) + m.drone_time(j, k);
        let cost = match objective {
            Objective::MinCost => {
                let truck_dist = prefix.dist[c] - prefix.dist[a] - m.truck_dist(prev, j) - m.truck_dist(j, next) + m.truck_dist(prev, next);
                p.truck_cost * truck_dist
                    + p.drone_cost * (m.drone_dist(i, j) + m.drone_dist(j, k))
                    + p.truck_wait_fee * (drone_time - truck_time).max(0.0)
                    + p.drone_wait_fee * (truck_time - drone_time).max(0.0)
            }
            Objective::MinTime => truck_time.max(drone_time) + p.launch_time + p.retrieve_time,
        };
        if best.is_none_or(|(c0, _)| cost < c0) {
            best = Some((cost, b));
        }
    }
    best
}

/// Every finite arc of the auxiliary graph, in `(from position, to position)`
/// order.
pub fn auxiliary_arcs(tour: &[NodeId], instance: &Instance, objective: Objective) -> Result<Vec<AuxArc>, SplitError> {
    check_tour(tour, instance)?;
    let prefix = Prefix::new(instance, tour);
    let mut arcs = Vec::new();
    for a in 0..tour.len() - 1 {
        arcs.push(AuxArc {
            from: tour[a],
            to: tour[a + 1],
            cost: arc_weight(instance, objective, tour[a], tour[a + 1]),
            drone_node: None,
        });
        for c in a + 2..tour.len() {
            if let Some((cost, b)) = spanning_arc(instance, objective, tour, &prefix, a, c) {
                arcs.push(AuxArc {
                    from: tour[a],
                    to: tour[c],
                    cost,
                    drone_node: Some(tour[b]),
                });
            }
        }
    }
    Ok(arcs)
}

/// Builds the auxiliary graph and runs the shortest-path recurrence.
pub fn build_and_search(tour: &[NodeId], instance: &Instance, objective: Objective) -> Result<SplitTables, SplitError> {
    check_tour(tour, instance)?;
    let len = tour.len();
    let prefix = Prefix::new(instance, tour);

    // V and P by tour position; remapped to node ids below
    let mut value = vec![f64::INFINITY; len];
    let mut pred = vec![usize::MAX; len];
    let mut sorties = Vec::new();
    value[0] = 0.0;
    for c in 1..len {
        for a in 0..c {
            let arc = if a + 1 == c {
                arc_weight(instance, objective, tour[a], tour[c])
            } else {
                match spanning_arc(instance, objective, tour, &prefix, a, c) {
                    Some((cost, b)) => {
                        sorties.push(SortieEntry {
                            launch: tour[a],
                            drone_node: tour[b],
                            rendezvous: tour[c],
                            cost,
                        });
                        cost
                    }
                    None => continue,
                }
            };
            let candidate = value[a] + arc;
            if candidate < value[c] {
                value[c] = candidate;
                pred[c] = a;
            }
        }
    }

    let nodes = instance.node_count();
    let mut by_node_value = vec![f64::INFINITY; nodes];
    let mut by_node_pred = vec![None; nodes];
    for (p, &v) in tour.iter().enumerate() {
        by_node_value[v] = value[p];
        if pred[p] != usize::MAX {
            by_node_pred[v] = Some(tour[pred[p]]);
        }
    }
    sorties.sort_by_key(|s| (s.launch, s.rendezvous));
    Ok(SplitTables {
        predecessor: by_node_pred,
        value: by_node_value,
        sorties,
    })
}

/// Rebuilds the solution encoded by the predecessor chain.
pub fn extract(tables: &SplitTables, tour: &[NodeId], instance: &Instance) -> Result<Solution, SplitError> {
    check_tour(tour, instance)?;
    let nodes = instance.node_count();
    if tables.predecessor.len() != nodes || tables.value.len() != nodes {
        return Err(SplitError::Internal("table size does not match instance".into()));
    }
    let mut pos = vec![0usize; nodes];
    for (p, &v) in tour.iter().enumerate() {
        pos[v] = p;
    }

    let mut chain = vec![instance.end_depot()];
    let mut cur = instance.end_depot();
    while cur != 0 {
        let prev = tables.predecessor[cur].ok_or_else(|| SplitError::Internal(format!("node {cur} has no predecessor")))?;
        if pos[prev] >= pos[cur] {
            return Err(SplitError::Internal(format!(
                "predecessor {prev} of {cur} is not earlier in the tour"
            )));
        }
        chain.push(prev);
        cur = prev;
    }
    chain.reverse();

    let mut truck = vec![0];
    let mut deliveries = Vec::new();
    for w in chain.windows(2) {
        let (i, k) = (w[0], w[1]);
        let (a, c) = (pos[i], pos[k]);
        if c == a + 1 {
            truck.push(k);
            continue;
        }
        let entry = tables
            .sorties
            .iter()
            .find(|s| s.launch == i && s.rendezvous == k)
            .ok_or_else(|| SplitError::Internal(format!("no sortie recorded for arc {i} -> {k}")))?;
        for &v in &tour[a + 1..=c] {
            if v != entry.drone_node {
                truck.push(v);
            }
        }
        deliveries.push(DroneDelivery::new(i, entry.drone_node, k));
    }
    Ok(Solution::new(truck, deliveries))
}

/// Optimal TSP-D solution that keeps the relative order of `tour`.
pub fn split(tour: &[NodeId], instance: &Instance, objective: Objective) -> Result<Solution, SplitError> {
    let tables = build_and_search(tour, instance, objective)?;
    extract(&tables, tour, instance)
}
