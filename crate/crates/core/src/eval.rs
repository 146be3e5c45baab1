//! Feasibility checks and objective evaluation.
//!
//! Both objectives are computed from a single timeline: the truck and the
//! drone leave a launch node together after the launch service, the vehicle
//! that reaches the rendezvous first waits for the other, and the retrieve
//! service follows the meeting. Waiting times therefore do not depend on the
//! service times, while the completion time includes them.

use std::fmt;

use thiserror::Error;

use crate::model::{DroneDelivery, Instance, NodeId, Objective, Solution};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The truck tour does not start at the depot.
    TourStart(Option<NodeId>),
    /// The truck tour does not end at the return depot.
    TourEnd(Option<NodeId>),
    UnknownNode(NodeId),
    RepeatedNode(NodeId),
    /// Constraint A.
    Unserved(NodeId),
    /// Constraint B.
    ServedTwiceByDrone(NodeId),
    /// Constraint C: the drone customer is also on the truck tour.
    DroneNodeOnTruck(DroneDelivery),
    /// Constraint C: launch or rendezvous node missing from the truck tour.
    EndpointNotOnTruck(DroneDelivery, NodeId),
    /// Constraint C: rendezvous does not come after launch.
    WrongOrder(DroneDelivery),
    /// Constraint D: the second sortie starts or ends while the first one is
    /// airborne.
    Interference(DroneDelivery, DroneDelivery),
    NotDroneEligible(DroneDelivery),
    EnduranceExceeded(DroneDelivery),
    /// Repeated node ids within the triple, a depot-to-depot sortie, or an
    /// id outside the instance.
    MalformedDelivery(DroneDelivery),
}

impl Violation {
    /// Label of the broken constraint family.
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::TourStart(_) | Violation::TourEnd(_) | Violation::UnknownNode(_) | Violation::RepeatedNode(_) => "tour",
            Violation::Unserved(_) => "A",
            Violation::ServedTwiceByDrone(_) => "B",
            Violation::DroneNodeOnTruck(_) | Violation::EndpointNotOnTruck(..) | Violation::WrongOrder(_) => "C",
            Violation::Interference(..) => "D",
            Violation::NotDroneEligible(_) | Violation::EnduranceExceeded(_) | Violation::MalformedDelivery(_) => "delivery",
        }
    }
}

fn fmt_delivery(d: &DroneDelivery) -> String {
    format!("<{}, {}, {}>", d.launch, d.customer, d.rendezvous)
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TourStart(v) => write!(f, "truck tour must start at depot 0, starts at {v:?}"),
            Violation::TourEnd(v) => write!(f, "truck tour must end at the return depot, ends at {v:?}"),
            Violation::UnknownNode(v) => write!(f, "unknown node {v} in truck tour"),
            Violation::RepeatedNode(v) => write!(f, "node {v} repeated in truck tour"),
            Violation::Unserved(v) => write!(f, "(A) customer {v} is not serviced"),
            Violation::ServedTwiceByDrone(v) => write!(f, "(B) customer {v} is serviced twice by the drone"),
            Violation::DroneNodeOnTruck(d) => write!(
                f,
                "(C) customer cannot be serviced by both the truck and drone: {} has drone node on the truck tour",
                fmt_delivery(d)
            ),
            Violation::EndpointNotOnTruck(d, v) => write!(f, "(C) node {v} of {} is not on the truck tour", fmt_delivery(d)),
            Violation::WrongOrder(d) => write!(f, "(C) rendezvous precedes launch in {}", fmt_delivery(d)),
            Violation::Interference(a, b) => write!(f, "(D) {} launches or lands while {} is airborne", fmt_delivery(b), fmt_delivery(a)),
            Violation::NotDroneEligible(d) => write!(f, "customer of {} cannot be served by drone", fmt_delivery(d)),
            Violation::EnduranceExceeded(d) => write!(f, "{} exceeds drone endurance", fmt_delivery(d)),
            Violation::MalformedDelivery(d) => write!(f, "{} is not a valid delivery triple", fmt_delivery(d)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("infeasible solution: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct Violations(pub Vec<Violation>);

/// Checks the tour shape, constraints A to D, eligibility and endurance.
pub fn validate(instance: &Instance, solution: &Solution) -> Result<(), Violations> {
    let violations = violations(instance, solution);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Violations(violations))
    }
}

pub fn violations(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let end = instance.end_depot();
    let nodes = instance.node_count();
    let tour = &solution.truck_tour;

    if tour.first() != Some(&0) {
        out.push(Violation::TourStart(tour.first().copied()));
    }
    if tour.last() != Some(&end) || tour.len() < 2 {
        out.push(Violation::TourEnd(tour.last().copied()));
    }
    let mut pos = vec![usize::MAX; nodes];
    for (p, &v) in tour.iter().enumerate() {
        if v >= nodes {
            out.push(Violation::UnknownNode(v));
        } else if pos[v] != usize::MAX {
            out.push(Violation::RepeatedNode(v));
        } else {
            pos[v] = p;
        }
    }

    let mut drone_served = vec![0usize; nodes];
    for d in &solution.deliveries {
        let (i, j, k) = (d.launch, d.customer, d.rendezvous);
        if i >= nodes
            || j >= nodes
            || k >= nodes
            || i == j
            || j == k
            || i == k
            || i == end
            || k == 0
            || (i == 0 && k == end)
            || !instance.is_customer(j)
        {
            out.push(Violation::MalformedDelivery(*d));
            continue;
        }
        drone_served[j] += 1;
        if !instance.is_drone_eligible(j) {
            out.push(Violation::NotDroneEligible(*d));
        }
        if instance.flight_time(i, j, k) > instance.params().endurance {
            out.push(Violation::EnduranceExceeded(*d));
        }
        if pos[j] != usize::MAX {
            out.push(Violation::DroneNodeOnTruck(*d));
        }
        for v in [i, k] {
            if pos[v] == usize::MAX {
                out.push(Violation::EndpointNotOnTruck(*d, v));
            }
        }
        if pos[i] != usize::MAX && pos[k] != usize::MAX && pos[i] >= pos[k] {
            out.push(Violation::WrongOrder(*d));
        }
    }

    for v in instance.customers() {
        if pos[v] == usize::MAX && drone_served[v] == 0 {
            out.push(Violation::Unserved(v));
        }
        if drone_served[v] > 1 {
            out.push(Violation::ServedTwiceByDrone(v));
        }
    }

    // Constraint D on the well-placed sorties: ordered by launch position, no
    // sortie may launch before the previous one has landed.
    let mut placed: Vec<(usize, usize, &DroneDelivery)> = solution
        .deliveries
        .iter()
        .filter(|d| {
            d.launch < nodes
                && d.rendezvous < nodes
                && pos[d.launch] != usize::MAX
                && pos[d.rendezvous] != usize::MAX
                && pos[d.launch] < pos[d.rendezvous]
        })
        .map(|d| (pos[d.launch], pos[d.rendezvous], d))
        .collect();
    placed.sort_by_key(|&(a, b, d)| (a, b, *d));
    for (x, a) in placed.iter().enumerate() {
        for b in &placed[x + 1..] {
            if b.0 < a.1 {
                out.push(Violation::Interference(*a.2, *b.2));
            }
        }
    }
    out
}

/// Timing of one sortie.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SortieTiming {
    pub delivery: DroneDelivery,
    pub launch: f64,
    pub at_customer: f64,
    pub at_rendezvous: f64,
    /// Minutes the truck waits for the drone at the rendezvous.
    pub truck_wait: f64,
    /// Minutes the drone hovers waiting for the truck at the rendezvous.
    pub drone_wait: f64,
}

/// Arrival and departure minutes along the truck tour plus per-sortie timing.
#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    /// Indexed by tour position.
    pub truck_arrival: Vec<f64>,
    /// Indexed by tour position; includes waiting and service times.
    pub truck_departure: Vec<f64>,
    /// In the order of `Solution::deliveries`.
    pub sorties: Vec<SortieTiming>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub truck_transport_cost: f64,
    pub drone_transport_cost: f64,
    pub truck_waiting_cost: f64,
    pub drone_waiting_cost: f64,
    pub total_cost: f64,
    /// Minutes until both vehicles are back at the depot, retrieve service
    /// included.
    pub completion_time: f64,
    pub truck_waiting_time: f64,
    pub drone_waiting_time: f64,
    pub timeline: Timeline,
}

impl Evaluation {
    pub fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::MinCost => self.total_cost,
            Objective::MinTime => self.completion_time,
        }
    }
}

/// Validates, then evaluates both objectives.
pub fn evaluate(instance: &Instance, solution: &Solution) -> Result<Evaluation, Violations> {
    validate(instance, solution)?;
    Ok(evaluate_unchecked(instance, solution))
}

pub fn evaluate_min_cost(instance: &Instance, solution: &Solution) -> Result<Evaluation, Violations> {
    evaluate(instance, solution)
}

pub fn evaluate_min_time(instance: &Instance, solution: &Solution) -> Result<Evaluation, Violations> {
    evaluate(instance, solution)
}

/// Objective value of a solution that is known to be feasible.
pub fn objective_value(instance: &Instance, solution: &Solution, objective: Objective) -> f64 {
    evaluate_unchecked(instance, solution).value(objective)
}

pub(crate) fn evaluate_unchecked(instance: &Instance, solution: &Solution) -> Evaluation {
    let m = instance.matrices();
    let p = instance.params();
    let tour = &solution.truck_tour;

    let mut launch_at = vec![usize::MAX; instance.node_count()];
    let mut land_at = vec![usize::MAX; instance.node_count()];
    for (s, d) in solution.deliveries.iter().enumerate() {
        launch_at[d.launch] = s;
        land_at[d.rendezvous] = s;
    }

    let mut sorties: Vec<SortieTiming> = solution
        .deliveries
        .iter()
        .map(|&delivery| SortieTiming {
            delivery,
            launch: 0.0,
            at_customer: 0.0,
            at_rendezvous: 0.0,
            truck_wait: 0.0,
            drone_wait: 0.0,
        })
        .collect();

    let mut arrival = Vec::<f64>::with_capacity(tour.len());
    let mut departure = Vec::<f64>::with_capacity(tour.len());
    let mut truck_dist = 0.0;
    for (pos, &v) in tour.iter().enumerate() {
        let arrive: f64 = if pos == 0 {
            0.0
        } else {
            let u = tour[pos - 1];
            truck_dist += m.truck_dist(u, v);
            departure[pos - 1] + m.truck_time(u, v)
        };
        let mut ready = arrive;
        if land_at[v] != usize::MAX {
            let st = &mut sorties[land_at[v]];
            let drone_arrive = st.launch + instance.flight_time(st.delivery.launch, st.delivery.customer, v);
            st.at_rendezvous = drone_arrive;
            let meet = arrive.max(drone_arrive);
            st.truck_wait = meet - arrive;
            st.drone_wait = meet - drone_arrive;
            ready = meet + p.retrieve_time;
        }
        if launch_at[v] != usize::MAX {
            ready += p.launch_time;
            let st = &mut sorties[launch_at[v]];
            st.launch = ready;
            st.at_customer = ready + m.drone_time(v, st.delivery.customer);
        }
        arrival.push(arrive);
        departure.push(ready);
    }

    let drone_dist: f64 = solution
        .deliveries
        .iter()
        .map(|d| m.drone_dist(d.launch, d.customer) + m.drone_dist(d.customer, d.rendezvous))
        .sum();
    let truck_waiting_time: f64 = sorties.iter().map(|s| s.truck_wait).sum();
    let drone_waiting_time: f64 = sorties.iter().map(|s| s.drone_wait).sum();

    let truck_transport_cost = p.truck_cost * truck_dist;
    let drone_transport_cost = p.drone_cost * drone_dist;
    let truck_waiting_cost = p.truck_wait_fee * truck_waiting_time;
    let drone_waiting_cost = p.drone_wait_fee * drone_waiting_time;
    Evaluation {
        truck_transport_cost,
        drone_transport_cost,
        truck_waiting_cost,
        drone_waiting_cost,
        total_cost: truck_transport_cost + drone_transport_cost + truck_waiting_cost + drone_waiting_cost,
        completion_time: departure.last().copied().unwrap_or(0.0),
        truck_waiting_time,
        drone_waiting_time,
        timeline: Timeline {
            truck_arrival: arrival,
            truck_departure: departure,
            sorties,
        },
    }
}
