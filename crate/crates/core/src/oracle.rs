//! Brute-force solvers used as ground truth on small instances.
//!
//! Both solvers enumerate complete solutions and score each one with the
//! evaluator; they share no arithmetic with the split procedure.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::eval::{evaluate_unchecked, validate};
use crate::model::{DroneDelivery, Instance, NodeId, Objective, Solution};

/// Longest giant tour `exact_split` accepts, depots included.
pub const MAX_SPLIT_TOUR: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {n} customers, exact search is limited to {max}")]
    TooLarge { n: usize, max: usize },
    #[error("exact search aborted after {0:?}")]
    Timeout(Duration),
    #[error("giant tour must start at 0, end at the return depot and visit every customer once")]
    InvalidTour,
}

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    pub max_customers: usize,
    pub time_limit: Duration,
    pub parallel: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            max_customers: 7,
            time_limit: Duration::from_secs(120),
            parallel: true,
        }
    }
}

/// Enumerates every order-respecting, non-interfering set of sorties on
/// `tour` and calls `visit` with each resulting solution.
fn for_each_split(instance: &Instance, tour: &[NodeId], visit: &mut dyn FnMut(&Solution)) {
    // Each step either drives one truck arc or flies one sortie spanning
    // positions a..c with the drone node at an interior position b.
    fn rec(
        instance: &Instance,
        tour: &[NodeId],
        a: usize,
        truck: &mut Vec<NodeId>,
        drones: &mut Vec<DroneDelivery>,
        visit: &mut dyn FnMut(&Solution),
    ) {
        let last = tour.len() - 1;
        if a == last {
            visit(&Solution::new(truck.clone(), drones.clone()));
            return;
        }
        truck.push(tour[a + 1]);
        rec(instance, tour, a + 1, truck, drones, visit);
        truck.pop();
        for c in a + 2..=last {
            for b in a + 1..c {
                let (i, j, k) = (tour[a], tour[b], tour[c]);
                if !instance.is_feasible_delivery(i, j, k) {
                    continue;
                }
                let mark = truck.len();
                truck.extend(tour[a + 1..=c].iter().copied().filter(|&v| v != j));
                drones.push(DroneDelivery::new(i, j, k));
                rec(instance, tour, c, truck, drones, visit);
                drones.pop();
                truck.truncate(mark);
            }
        }
    }
    let mut truck = vec![tour[0]];
    let mut drones = Vec::new();
    rec(instance, tour, 0, &mut truck, &mut drones, visit);
}

fn is_giant_tour(instance: &Instance, tour: &[NodeId]) -> bool {
    if tour.len() != instance.node_count() || tour.first() != Some(&0) || tour.last() != Some(&instance.end_depot()) {
        return false;
    }
    let mut seen = vec![false; tour.len()];
    tour.iter().all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

/// Best split of `tour` found by exhaustive enumeration.
pub fn exact_split(tour: &[NodeId], instance: &Instance, objective: Objective) -> Result<(Solution, f64), OracleError> {
    if !is_giant_tour(instance, tour) {
        return Err(OracleError::InvalidTour);
    }
    if tour.len() > MAX_SPLIT_TOUR {
        return Err(OracleError::TooLarge {
            n: instance.n(),
            max: MAX_SPLIT_TOUR - 2,
        });
    }
    let mut best: Option<(Solution, f64)> = None;
    for_each_split(instance, tour, &mut |sol| {
        debug_assert!(validate(instance, sol).is_ok());
        let value = evaluate_unchecked(instance, sol).value(objective);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((sol.clone(), value));
        }
    });
    Ok(best.expect("the all-truck split always exists"))
}

/// Advances `perm` to the next lexicographic permutation.
fn next_permutation(perm: &mut [NodeId]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&x| x > perm[i]).expect("pivot has a successor");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// Optimal solution over all truck orders and sortie assignments.
///
/// Permutations are visited in lexicographic order, split by their first
/// customer across workers when `options.parallel` is set; ties keep the
/// earliest permutation.
pub fn exact_tspd(instance: &Instance, objective: Objective, options: &ExactOptions) -> Result<(Solution, f64), OracleError> {
    let n = instance.n();
    if n > options.max_customers {
        return Err(OracleError::TooLarge {
            n,
            max: options.max_customers,
        });
    }
    let start = Instant::now();
    let aborted = AtomicBool::new(false);
    let end = instance.end_depot();

    let subtree = |first: NodeId| -> Option<(Solution, f64)> {
        let mut rest: Vec<NodeId> = instance.customers().filter(|&v| v != first).collect();
        let mut best: Option<(Solution, f64)> = None;
        let mut tour = Vec::with_capacity(n + 2);
        loop {
            if aborted.load(Ordering::Relaxed) {
                return None;
            }
            if start.elapsed() > options.time_limit {
                aborted.store(true, Ordering::Relaxed);
                return None;
            }
            tour.clear();
            tour.push(0);
            tour.push(first);
            tour.extend_from_slice(&rest);
            tour.push(end);
            for_each_split(instance, &tour, &mut |sol| {
                let value = evaluate_unchecked(instance, sol).value(objective);
                if best.as_ref().is_none_or(|(_, v)| value < *v) {
                    best = Some((sol.clone(), value));
                }
            });
            if !next_permutation(&mut rest) {
                break;
            }
        }
        best
    };

    let firsts: Vec<NodeId> = instance.customers().collect();
    let results: Vec<Option<(Solution, f64)>> = if options.parallel {
        firsts.par_iter().map(|&f| subtree(f)).collect()
    } else {
        firsts.iter().map(|&f| subtree(f)).collect()
    };
    if aborted.load(Ordering::Relaxed) {
        return Err(OracleError::Timeout(options.time_limit));
    }
    let mut best: Option<(Solution, f64)> = None;
    for (sol, value) in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((sol, value));
        }
    }
    Ok(best.expect("at least one customer"))
}

/// Number of solutions `exact_split` scores for `tour`.
pub fn count_splits(instance: &Instance, tour: &[NodeId]) -> usize {
    let mut count = 0;
    for_each_split(instance, tour, &mut |_| count += 1);
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::model::fixtures::line_instance;
    use crate::model::{CostParams, Point};

    #[test]
    fn line_instance_golden() {
        let inst = line_instance(0.0);
        let (sol, value) = exact_split(&[0, 1, 2, 3, 4], &inst, Objective::MinCost).unwrap();
        assert_eq!(sol, Solution::new(vec![0, 1, 3, 4], vec![DroneDelivery::new(1, 2, 4)]));
        // truck 150, drone sqrt(4.25) + 2.5 km, drone waits 7.5 min minus its flight
        let km = 4.25f64.sqrt() + 2.5;
        assert!((value - (150.0 + km + 10.0 * (7.5 - 1.5 * km))).abs() < 1e-9);
        let via3 = evaluate(&inst, &Solution::new(vec![0, 1, 3, 4], vec![DroneDelivery::new(1, 2, 3)])).unwrap();
        assert!((via3.total_cost - 192.99).abs() < 1e-2);
        assert!(value < via3.total_cost);
        // the all-truck split is among the candidates and costs 250
        let truck = evaluate(&inst, &Solution::truck_only(vec![0, 1, 2, 3, 4])).unwrap();
        assert!((truck.total_cost - 250.0).abs() < 1e-9);
    }

    #[test]
    fn split_count_without_endurance_limit() {
        // With every triple feasible the count follows
        // f(m) = f(m-1) + sum_{s>=2} (s-1) f(m-s), minus depot-to-depot sorties.
        let params = CostParams {
            endurance: 1e9,
            ..Default::default()
        };
        let pts = (0..4).map(|v| Point::new(v as f64, 1.0)).collect();
        let inst = Instance::new("f", 16.0, pts, 1..=3, params).unwrap();
        let arcs = 4;
        let mut f = vec![1usize; arcs + 1];
        for m in 2..=arcs {
            f[m] = f[m - 1] + (2..=m).map(|s| (s - 1) * f[m - s]).sum::<usize>();
        }
        // three sorties span the whole tour from 0 to 4
        assert_eq!(count_splits(&inst, &[0, 1, 2, 3, 4]), f[arcs] - 3);
    }

    #[test]
    fn single_customer_has_no_sortie() {
        let inst = Instance::new(
            "one",
            4.0,
            vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
            [1],
            CostParams::default(),
        )
        .unwrap();
        let (sol, value) = exact_tspd(&inst, Objective::MinCost, &ExactOptions::default()).unwrap();
        assert_eq!(sol, Solution::truck_only(vec![0, 1, 2]));
        assert!((value - 25.0 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn two_customers_take_the_cheaper_branch() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 3.0)];
        // customer 2 eligible; drone cheap and fast
        let fast = CostParams {
            drone_speed: 200.0,
            launch_time: 0.0,
            retrieve_time: 0.0,
            ..Default::default()
        };
        let inst = Instance::new("two", 9.0, pts.clone(), [2], fast).unwrap();
        let (sol, value) = exact_tspd(&inst, Objective::MinCost, &ExactOptions::default()).unwrap();
        // enumerate both branches by hand
        let truck = evaluate(&inst, &Solution::truck_only(vec![0, 1, 2, 3])).unwrap().total_cost;
        let drone = evaluate(&inst, &Solution::new(vec![0, 1, 3], vec![DroneDelivery::new(1, 2, 3)]))
            .unwrap()
            .total_cost;
        assert!(drone < truck);
        assert!((value - drone).abs() < 1e-9);
        // launching at the depot and landing at 1 mirrors <1, 2, 3>
        assert_eq!(sol.deliveries.len(), 1);
        assert_eq!(sol.deliveries[0].customer, 2);

        // a costly drone flips the decision
        let pricey = CostParams {
            drone_cost: 1000.0,
            ..fast
        };
        let inst = inst.with_params(pricey).unwrap();
        let (sol, _) = exact_tspd(&inst, Objective::MinCost, &ExactOptions::default()).unwrap();
        assert!(sol.deliveries.is_empty());
    }

    #[test]
    fn refuses_large_instances() {
        let pts = (0..10).map(|v| Point::new(v as f64, 0.0)).collect();
        let inst = Instance::new("big", 100.0, pts, [], CostParams::default()).unwrap();
        assert_eq!(
            exact_tspd(&inst, Objective::MinCost, &ExactOptions::default()).unwrap_err(),
            OracleError::TooLarge { n: 9, max: 7 }
        );
    }

    #[test]
    fn permutation_order() {
        let mut p = vec![1, 2, 3];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 6);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
    }
}
