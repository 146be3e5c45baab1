//! TSP-LS: start from a good TSP tour and greedily move one customer per
//! iteration, either to another truck position or onto a new sortie.
//!
//! The truck route is kept as a chain of subroutes that share endpoints. A
//! subroute either carries exactly one sortie spanning it end to end or none.

use thiserror::Error;

use crate::construct::{best_known_tour, exact_tsp, EXACT_TSP_LIMIT};
use crate::eval::{evaluate, Evaluation, Violations};
use crate::localsearch::Scorer;
use crate::model::{DroneDelivery, Instance, NodeId, Objective, Solution};

#[derive(Debug, Error)]
pub enum TspLsError {
    #[error("initial tour is not a giant tour of the instance")]
    InvalidTour,
    #[error("result failed validation: {0}")]
    Infeasible(#[from] Violations),
}

#[derive(Clone, Debug, PartialEq)]
struct Subroute {
    nodes: Vec<NodeId>,
    drone: Option<NodeId>,
}

/// Best move of one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestMove {
    pub is_drone_node: bool,
    pub i: NodeId,
    pub j: NodeId,
    pub k: NodeId,
    pub savings: f64,
}

pub struct TspLsResult {
    pub solution: Solution,
    pub evaluation: Evaluation,
    pub iterations: usize,
    pub initial_tour: Vec<NodeId>,
}

struct State<'a> {
    sc: Scorer<'a>,
    candidates: Vec<bool>,
    subroutes: Vec<Subroute>,
}

impl<'a> State<'a> {
    fn new(sc: Scorer<'a>, tour: &[NodeId]) -> Self {
        let mut candidates = vec![false; sc.instance.node_count()];
        for v in sc.instance.customers() {
            candidates[v] = true;
        }
        Self {
            sc,
            candidates,
            subroutes: vec![Subroute {
                nodes: tour.to_vec(),
                drone: None,
            }],
        }
    }

    fn locate(&self, j: NodeId) -> Option<(usize, usize)> {
        self.subroutes
            .iter()
            .enumerate()
            .find_map(|(s, r)| r.nodes[1..r.nodes.len() - 1].iter().position(|&v| v == j).map(|p| (s, p + 1)))
    }

    fn truck_time(&self, nodes: &[NodeId]) -> f64 {
        nodes.windows(2).map(|w| self.sc.time(w[0], w[1])).sum()
    }

    /// Sortie term of subroute `s` when its truck leg takes `t` minutes.
    fn sortie_term(&self, s: usize, t: f64) -> f64 {
        let r = &self.subroutes[s];
        match r.drone {
            Some(j) => self.sc.sortie(r.nodes[0], j, *r.nodes.last().unwrap(), t),
            None => 0.0,
        }
    }

    /// Objective decrease from taking `j` out of the truck route.
    fn calc_savings(&self, j: NodeId) -> Option<f64> {
        let (s, p) = self.locate(j)?;
        let nodes = &self.subroutes[s].nodes;
        let (a, b) = (nodes[p - 1], nodes[p + 1]);
        let detour = self.sc.arc(a, j) + self.sc.arc(j, b) - self.sc.arc(a, b);
        let mut savings = detour;
        if self.subroutes[s].drone.is_some() {
            let t_old = self.truck_time(nodes);
            let dt = self.sc.time(a, j) + self.sc.time(j, b) - self.sc.time(a, b);
            savings += self.sortie_term(s, t_old) - self.sortie_term(s, t_old - dt);
        }
        Some(savings)
    }

    /// Scans truck insertions of `j` into sortie-bearing subroutes.
    fn relocate_as_truck(&self, j: NodeId, savings: f64, best: &mut Option<BestMove>) {
        let (sj, pj) = self.locate(j).expect("candidate is on the truck route");
        let own = &self.subroutes[sj].nodes;
        let (a, b) = (own[pj - 1], own[pj + 1]);
        let removal_dt = self.sc.time(a, j) + self.sc.time(j, b) - self.sc.time(a, b);
        let removal_dw = self.sc.arc(a, j) + self.sc.arc(j, b) - self.sc.arc(a, b);
        let endurance = self.sc.instance.params().endurance;

        for (s, r) in self.subroutes.iter().enumerate() {
            let Some(d) = r.drone else {
                continue;
            };
            let (i, k) = (r.nodes[0], *r.nodes.last().unwrap());
            let flight = self.sc.instance.flight_time(i, d, k);
            let t_old = self.truck_time(&r.nodes);
            for w in r.nodes.windows(2) {
                let (u, v) = (w[0], w[1]);
                if u == j || v == j {
                    continue;
                }
                let ins_dw = self.sc.arc(u, j) + self.sc.arc(j, v) - self.sc.arc(u, v);
                let ins_dt = self.sc.time(u, j) + self.sc.time(j, v) - self.sc.time(u, v);
                let (t_new, gain) = if s == sj {
                    let t_new = t_old - removal_dt + ins_dt;
                    (
                        t_new,
                        removal_dw - ins_dw - (self.sortie_term(s, t_new) - self.sortie_term(s, t_old)),
                    )
                } else {
                    let t_new = t_old + ins_dt;
                    (t_new, savings - ins_dw - (self.sortie_term(s, t_new) - self.sortie_term(s, t_old)))
                };
                if t_new.max(flight) > endurance {
                    continue;
                }
                if best.is_none_or(|m| gain > m.savings) {
                    *best = Some(BestMove {
                        is_drone_node: false,
                        i: u,
                        j,
                        k: v,
                        savings: gain,
                    });
                }
            }
        }
    }

    /// Scans sorties `<i, j, k>` over sortie-free subroutes.
    fn relocate_as_drone(&self, j: NodeId, savings: f64, best: &mut Option<BestMove>) {
        if !self.sc.instance.is_drone_eligible(j) {
            return;
        }
        for r in &self.subroutes {
            if r.drone.is_some() {
                continue;
            }
            let nodes: Vec<NodeId> = r.nodes.iter().copied().filter(|&v| v != j).collect();
            let mut prefix = vec![0.0; nodes.len()];
            for p in 1..nodes.len() {
                prefix[p] = prefix[p - 1] + self.sc.time(nodes[p - 1], nodes[p]);
            }
            for pi in 0..nodes.len() - 1 {
                for pk in pi + 1..nodes.len() {
                    let (i, k) = (nodes[pi], nodes[pk]);
                    if !self.sc.instance.is_feasible_delivery(i, j, k) {
                        continue;
                    }
                    let gain = savings - self.sc.sortie(i, j, k, prefix[pk] - prefix[pi]);
                    if best.is_none_or(|m| gain > m.savings) {
                        *best = Some(BestMove {
                            is_drone_node: true,
                            i,
                            j,
                            k,
                            savings: gain,
                        });
                    }
                }
            }
        }
    }

    fn best_move(&self) -> Option<BestMove> {
        let mut best = None;
        for j in self.sc.instance.customers() {
            if !self.candidates[j] {
                continue;
            }
            let Some(savings) = self.calc_savings(j) else {
                continue;
            };
            self.relocate_as_truck(j, savings, &mut best);
            self.relocate_as_drone(j, savings, &mut best);
        }
        best
    }

    fn apply(&mut self, mv: BestMove) {
        let (sj, pj) = self.locate(mv.j).expect("moved node is on the truck route");
        self.subroutes[sj].nodes.remove(pj);
        self.candidates[mv.j] = false;
        if !mv.is_drone_node {
            let target = self
                .subroutes
                .iter_mut()
                .find(|r| r.drone.is_some() && r.nodes.windows(2).any(|w| (w[0], w[1]) == (mv.i, mv.k)))
                .expect("insertion arc exists");
            let at = target.nodes.windows(2).position(|w| (w[0], w[1]) == (mv.i, mv.k)).unwrap();
            target.nodes.insert(at + 1, mv.j);
            return;
        }
        let s = self
            .subroutes
            .iter()
            .position(|r| {
                r.drone.is_none() && {
                    let pi = r.nodes.iter().position(|&v| v == mv.i);
                    let pk = r.nodes.iter().position(|&v| v == mv.k);
                    matches!((pi, pk), (Some(a), Some(b)) if a < b)
                }
            })
            .expect("target subroute exists");
        let nodes = std::mem::take(&mut self.subroutes[s].nodes);
        let pi = nodes.iter().position(|&v| v == mv.i).unwrap();
        let pk = nodes.iter().position(|&v| v == mv.k).unwrap();
        let pieces = [
            Subroute {
                nodes: nodes[..=pi].to_vec(),
                drone: None,
            },
            Subroute {
                nodes: nodes[pi..=pk].to_vec(),
                drone: Some(mv.j),
            },
            Subroute {
                nodes: nodes[pk..].to_vec(),
                drone: None,
            },
        ];
        self.subroutes.splice(s..=s, pieces.into_iter().filter(|r| r.nodes.len() > 1));
        self.candidates[mv.i] = false;
        self.candidates[mv.k] = false;
    }

    fn solution(&self) -> Solution {
        let mut tour = vec![self.subroutes[0].nodes[0]];
        let mut deliveries = Vec::new();
        for r in &self.subroutes {
            tour.extend_from_slice(&r.nodes[1..]);
            if let Some(j) = r.drone {
                deliveries.push(DroneDelivery::new(r.nodes[0], j, *r.nodes.last().unwrap()));
            }
        }
        Solution::new(tour, deliveries)
    }
}

fn is_giant_tour(instance: &Instance, tour: &[NodeId]) -> bool {
    if tour.len() != instance.node_count() || tour.first() != Some(&0) || tour.last() != Some(&instance.end_depot()) {
        return false;
    }
    let mut seen = vec![false; tour.len()];
    tour.iter().all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

/// Default starting tour: optimal for small instances, otherwise the best of
/// 50 seeded constructor runs.
pub fn initial_tour(instance: &Instance) -> Vec<NodeId> {
    if instance.n() <= EXACT_TSP_LIMIT {
        exact_tsp(instance).expect("within the exact limit")
    } else {
        best_known_tour(instance, 0)
    }
}

/// Runs TSP-LS from `initial` or from [`initial_tour`].
pub fn run_tspls(instance: &Instance, objective: Objective, initial: Option<&[NodeId]>) -> Result<TspLsResult, TspLsError> {
    let tour = match initial {
        Some(t) => t.to_vec(),
        None => initial_tour(instance),
    };
    if !is_giant_tour(instance, &tour) {
        return Err(TspLsError::InvalidTour);
    }
    let sc = Scorer::new(instance, objective);
    let mut state = State::new(sc, &tour);
    let mut iterations = 0;
    loop {
        let value = sc.total(&state.solution());
        match state.best_move() {
            Some(mv) if mv.savings > 1e-9 * value.abs().max(1.0) => {
                state.apply(mv);
                iterations += 1;
            }
            _ => break,
        }
    }
    let solution = state.solution();
    let evaluation = evaluate(instance, &solution)?;
    Ok(TspLsResult {
        solution,
        evaluation,
        iterations,
        initial_tour: tour,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::validate;
    use crate::model::fixtures::line_instance;
    use crate::model::{CostParams, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn value(inst: &Instance, sol: &Solution, obj: Objective) -> f64 {
        evaluate(inst, sol).unwrap().value(obj)
    }

    #[test]
    fn savings_of_a_unit_triangle() {
        // d_ij = d_jk = d_ik = 1 under Manhattan distance
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.5, 0.5), Point::new(1.0, 0.0)];
        let params = CostParams {
            truck_metric: crate::model::Metric::Manhattan,
            ..Default::default()
        };
        let inst = Instance::new("tri", 4.0, pts, [], params).unwrap();
        let state = State::new(Scorer::new(&inst, Objective::MinCost), &[0, 1, 2, 3]);
        // from 0 via 1 to 2: 1 + 1 - 1 = 1 km saved
        assert!((state.calc_savings(1).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_node_saves_nothing() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
        ];
        let inst = Instance::new("col", 4.0, pts, [], CostParams::default()).unwrap();
        let state = State::new(Scorer::new(&inst, Objective::MinCost), &[0, 1, 2, 3, 4]);
        assert!(state.calc_savings(1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn savings_inside_a_sortie_subroute_include_waiting() {
        // 1 km/min for both vehicles. Truck 1 -> 2 -> 3 takes 2 min, 1 -> 3
        // takes 1 min; the sortie <1, 4, 3> flies 4 min. The truck waits 2
        // min now and 3 min once 2 is dropped.
        let params = CostParams {
            truck_speed: 60.0,
            drone_speed: 60.0,
            ..Default::default()
        };
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.5, 0.5),
            Point::new(2.0, 0.0),
            Point::new(1.5, 3.75f64.sqrt()),
        ];
        let inst = Instance::new("w", 9.0, pts, [4], params).unwrap();
        assert!((inst.flight_time(1, 4, 3) - 4.0).abs() < 1e-12);
        let mut state = State::new(Scorer::new(&inst, Objective::MinCost), &[0, 1, 2, 3, 5]);
        state.subroutes = vec![
            Subroute {
                nodes: vec![0, 1],
                drone: None,
            },
            Subroute {
                nodes: vec![1, 2, 3],
                drone: Some(4),
            },
            Subroute {
                nodes: vec![3, 5],
                drone: None,
            },
        ];
        let detour = 25.0 * (1.0 + 1.0 - 1.0);
        let waiting = state.calc_savings(2).unwrap() - detour;
        assert!((waiting + 10.0).abs() < 1e-9);
    }

    #[test]
    fn first_iteration_on_line_instance() {
        let inst = line_instance(0.0);
        let sc = Scorer::new(&inst, Objective::MinCost);
        let state = State::new(sc, &[0, 1, 2, 3, 4]);
        let mv = state.best_move().unwrap();
        assert!(mv.is_drone_node);
        assert_eq!((mv.i, mv.j, mv.k), (1, 2, 4));
        let truck = value(&inst, &Solution::truck_only(vec![0, 1, 2, 3, 4]), Objective::MinCost);
        let after = value(
            &inst,
            &Solution::new(vec![0, 1, 3, 4], vec![DroneDelivery::new(1, 2, 4)]),
            Objective::MinCost,
        );
        assert!((truck - 250.0).abs() < 1e-9);
        assert!((mv.savings - (truck - after)).abs() < 1e-9);

        // the <1, 2, 3> candidate is worth 250 - 192.99
        let mut best = None;
        state.relocate_as_drone(2, state.calc_savings(2).unwrap(), &mut best);
        let via3 = value(
            &inst,
            &Solution::new(vec![0, 1, 3, 4], vec![DroneDelivery::new(1, 2, 3)]),
            Objective::MinCost,
        );
        assert!((truck - via3 - 57.01).abs() < 1e-2);
    }

    #[test]
    fn apply_drone_move_splits_and_consumes_three() {
        let inst = line_instance(0.0);
        let mut state = State::new(Scorer::new(&inst, Objective::MinCost), &[0, 1, 2, 3, 4]);
        let before = state.candidates.iter().filter(|&&c| c).count();
        state.apply(BestMove {
            is_drone_node: true,
            i: 1,
            j: 2,
            k: 3,
            savings: 0.0,
        });
        assert_eq!(state.candidates.iter().filter(|&&c| c).count(), before - 3);
        assert_eq!(state.solution(), Solution::new(vec![0, 1, 3, 4], vec![DroneDelivery::new(1, 2, 3)]));
        let nodes: Vec<Vec<NodeId>> = state.subroutes.iter().map(|r| r.nodes.clone()).collect();
        assert_eq!(nodes, vec![vec![0, 1], vec![1, 3], vec![3, 4]]);
    }

    #[test]
    fn line_instance_run() {
        let inst = line_instance(0.0);
        let res = run_tspls(&inst, Objective::MinCost, None).unwrap();
        assert_eq!(res.initial_tour.len(), 5);
        assert!(res.evaluation.total_cost < 250.0);
        assert!(res.iterations <= inst.n());
    }

    #[test]
    fn no_eligible_customers_keeps_the_tour() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 1.0),
            Point::new(1.0, 4.0),
            Point::new(5.0, 5.0),
        ];
        let inst = Instance::new("t", 36.0, pts, [], CostParams::default()).unwrap();
        let tour = exact_tsp(&inst).unwrap();
        let res = run_tspls(&inst, Objective::MinCost, None).unwrap();
        assert_eq!(res.solution, Solution::truck_only(tour));
    }

    #[test]
    fn endurance_gate_rejects_long_truck_legs() {
        let inst = line_instance(0.0).with_params(CostParams {
            endurance: 7.0,
            ..Default::default()
        });
        let inst = inst.unwrap();
        let mut state = State::new(Scorer::new(&inst, Objective::MinCost), &[0, 1, 2, 3, 4]);
        state.apply(BestMove {
            is_drone_node: true,
            i: 0,
            j: 1,
            k: 2,
            savings: 0.0,
        });
        // leg 0 -> 2 takes 5.25 min; adding 3 to it would exceed 7 min
        let mut best = None;
        state.relocate_as_truck(3, state.calc_savings(3).unwrap(), &mut best);
        assert!(best.is_none());
    }

    #[test]
    fn runs_are_feasible_and_improve_on_the_tour() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.gen_range(4..10);
            let mut pts = vec![Point::new(0.0, 0.0)];
            pts.extend((0..n).map(|_| Point::new(rng.gen::<f64>() * 8.0, rng.gen::<f64>() * 8.0)));
            let eligible: Vec<NodeId> = (1..=n).filter(|_| rng.gen_bool(0.8)).collect();
            let inst = Instance::new("r", 64.0, pts, eligible, CostParams::default()).unwrap();
            for obj in [Objective::MinCost, Objective::MinTime] {
                let res = run_tspls(&inst, obj, None).unwrap();
                validate(&inst, &res.solution).unwrap();
                let start = value(&inst, &Solution::truck_only(res.initial_tour.clone()), obj);
                assert!(res.evaluation.value(obj) <= start + 1e-9);
                assert!(res.iterations <= n);
            }
        }
    }

    #[test]
    fn each_applied_iteration_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 9;
        let mut pts = vec![Point::new(0.0, 0.0)];
        pts.extend((0..n).map(|_| Point::new(rng.gen::<f64>() * 8.0, rng.gen::<f64>() * 8.0)));
        let inst = Instance::new("r", 64.0, pts, 1..=n, CostParams::default()).unwrap();
        let tour = exact_tsp(&inst).unwrap();
        let sc = Scorer::new(&inst, Objective::MinCost);
        let mut state = State::new(sc, &tour);
        let mut last = sc.total(&state.solution());
        while let Some(mv) = state.best_move().filter(|m| m.savings > 1e-9) {
            state.apply(mv);
            let sol = state.solution();
            validate(&inst, &sol).unwrap();
            let now = value(&inst, &sol, Objective::MinCost);
            assert!((last - now - mv.savings).abs() < 1e-9 * last);
            last = now;
        }
    }
}
