//! Local search over four neighbourhoods: truck relocation, drone
//! relocation, drone removal and two-node exchange.
//!
//! Both objectives decompose into a sum of truck-arc weights plus one term
//! per sortie that depends only on the sortie triple and the truck's travel
//! time between launch and rendezvous. Moves change a constant number of arcs
//! and sorties, so each candidate is scored in O(1) from prefix times.

use crate::eval::{validate, Violations};
use crate::model::{DroneDelivery, Instance, NodeId, Objective, Solution};
use crate::split::arc_weight;

const NONE: usize = usize::MAX;

/// Additive decomposition of an objective.
#[derive(Clone, Copy)]
pub(crate) struct Scorer<'a> {
    pub instance: &'a Instance,
    pub objective: Objective,
}

impl<'a> Scorer<'a> {
    pub fn new(instance: &'a Instance, objective: Objective) -> Self {
        Self { instance, objective }
    }

    #[inline]
    pub fn arc(&self, u: NodeId, v: NodeId) -> f64 {
        arc_weight(self.instance, self.objective, u, v)
    }

    #[inline]
    pub fn time(&self, u: NodeId, v: NodeId) -> f64 {
        self.instance.matrices().truck_time(u, v)
    }

    /// Contribution of sortie `<i, j, k>` when the truck needs `truck_time`
    /// minutes from `i` to `k`.
    #[inline]
    pub fn sortie(&self, i: NodeId, j: NodeId, k: NodeId, truck_time: f64) -> f64 {
        let m = self.instance.matrices();
        let p = self.instance.params();
        let drone_time = m.drone_time(i, j) + m.drone_time(j, k);
        match self.objective {
            Objective::MinCost => {
                p.drone_cost * (m.drone_dist(i, j) + m.drone_dist(j, k))
                    + p.truck_wait_fee * (drone_time - truck_time).max(0.0)
                    + p.drone_wait_fee * (truck_time - drone_time).max(0.0)
            }
            Objective::MinTime => (drone_time - truck_time).max(0.0) + p.launch_time + p.retrieve_time,
        }
    }

    /// Objective value of a feasible solution.
    pub fn total(&self, solution: &Solution) -> f64 {
        let tour = &solution.truck_tour;
        let mut pos = vec![NONE; self.instance.node_count()];
        let mut prefix = vec![0.0; tour.len()];
        let mut value = 0.0;
        for (p, &v) in tour.iter().enumerate() {
            pos[v] = p;
            if p > 0 {
                prefix[p] = prefix[p - 1] + self.time(tour[p - 1], v);
                value += self.arc(tour[p - 1], v);
            }
        }
        for d in &solution.deliveries {
            let t = prefix[pos[d.rendezvous]] - prefix[pos[d.launch]];
            value += self.sortie(d.launch, d.customer, d.rendezvous, t);
        }
        value
    }
}

/// A neighbourhood move, named by node ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    /// Reinsert truck-only node `a` immediately before `b`.
    RelocateTruck { a: NodeId, b: NodeId },
    /// Serve `a` by a new sortie `<i, a, k>`.
    RelocateDrone { a: NodeId, i: NodeId, k: NodeId },
    /// Drop the sortie serving `j` and insert `j` before `k`.
    RemoveDrone { j: NodeId, k: NodeId },
    /// Swap the places of `a` and `b` in the tour and in every sortie.
    TwoExchange { a: NodeId, b: NodeId },
}

fn sortie_roles(solution: &Solution, v: NodeId) -> bool {
    solution.deliveries.iter().any(|d| d.launch == v || d.rendezvous == v)
}

fn checked(instance: &Instance, solution: Solution) -> Option<Solution> {
    validate(instance, &solution).ok().map(|_| solution)
}

/// Moves truck-only node `a` before `b`. `None` when a precondition fails or
/// the result is infeasible.
pub fn relocate_truck(instance: &Instance, solution: &Solution, a: NodeId, b: NodeId) -> Option<Solution> {
    let tour = &solution.truck_tour;
    if !instance.is_customer(a) || a == b || b == 0 || !tour.contains(&a) || !tour.contains(&b) || sortie_roles(solution, a) {
        return None;
    }
    let mut new_tour: Vec<NodeId> = tour.iter().copied().filter(|&v| v != a).collect();
    let at = new_tour.iter().position(|&v| v == b)?;
    new_tour.insert(at, a);
    checked(instance, Solution::new(new_tour, solution.deliveries.clone()))
}

/// Serves `a` by the sortie `<i, a, k>`. A truck-only `a` leaves the tour; a
/// drone node `a` loses its previous sortie.
pub fn relocate_drone(instance: &Instance, solution: &Solution, a: NodeId, i: NodeId, k: NodeId) -> Option<Solution> {
    if !instance.is_customer(a) || i == a || k == a {
        return None;
    }
    let on_truck = solution.truck_tour.contains(&a);
    let is_drone = solution.deliveries.iter().any(|d| d.customer == a);
    if !(on_truck || is_drone) || (on_truck && sortie_roles(solution, a)) {
        return None;
    }
    let tour: Vec<NodeId> = solution.truck_tour.iter().copied().filter(|&v| v != a).collect();
    let mut deliveries: Vec<DroneDelivery> = solution.deliveries.iter().copied().filter(|d| d.customer != a).collect();
    deliveries.push(DroneDelivery::new(i, a, k));
    checked(instance, Solution::new(tour, deliveries))
}

/// Replaces the sortie serving `j` by a truck visit right before `k`.
pub fn remove_drone(instance: &Instance, solution: &Solution, j: NodeId, k: NodeId) -> Option<Solution> {
    if k == 0 || !solution.deliveries.iter().any(|d| d.customer == j) {
        return None;
    }
    let mut tour = solution.truck_tour.clone();
    let at = tour.iter().position(|&v| v == k)?;
    tour.insert(at, j);
    let deliveries = solution.deliveries.iter().copied().filter(|d| d.customer != j).collect();
    checked(instance, Solution::new(tour, deliveries))
}

/// Exchanges `a` and `b` wherever they appear. Truck/truck swaps tour
/// positions, drone/drone swaps the served customer of two sorties, and a
/// mixed pair trades roles; sorties launched or retrieved at a swapped
/// position follow the node that now occupies it.
pub fn two_exchange(instance: &Instance, solution: &Solution, a: NodeId, b: NodeId) -> Option<Solution> {
    if a == b || !instance.is_customer(a) || !instance.is_customer(b) {
        return None;
    }
    let swap = |v: NodeId| {
        if v == a {
            b
        } else if v == b {
            a
        } else {
            v
        }
    };
    let tour = solution.truck_tour.iter().map(|&v| swap(v)).collect();
    let deliveries = solution
        .deliveries
        .iter()
        .map(|d| DroneDelivery::new(swap(d.launch), swap(d.customer), swap(d.rendezvous)))
        .collect();
    checked(instance, Solution::new(tour, deliveries))
}

pub fn apply_move(instance: &Instance, solution: &Solution, mv: Move) -> Option<Solution> {
    match mv {
        Move::RelocateTruck { a, b } => relocate_truck(instance, solution, a, b),
        Move::RelocateDrone { a, i, k } => relocate_drone(instance, solution, a, i, k),
        Move::RemoveDrone { j, k } => remove_drone(instance, solution, j, k),
        Move::TwoExchange { a, b } => two_exchange(instance, solution, a, b),
    }
}

struct Sortie {
    d: DroneDelivery,
    t: f64,
    f: f64,
}

/// Positions, prefix times and sortie coverage of one solution.
struct State<'a> {
    sc: Scorer<'a>,
    tour: Vec<NodeId>,
    pos: Vec<usize>,
    prefix: Vec<f64>,
    sorties: Vec<Sortie>,
    /// `cover[p]`: sortie airborne over the arc into position `p`.
    cover: Vec<usize>,
    launch_of: Vec<usize>,
    land_of: Vec<usize>,
    drone_of: Vec<usize>,
}

impl<'a> State<'a> {
    fn new(sc: Scorer<'a>, solution: &Solution) -> Self {
        let nodes = sc.instance.node_count();
        let tour = solution.truck_tour.clone();
        let mut pos = vec![NONE; nodes];
        let mut prefix = vec![0.0; tour.len()];
        for (p, &v) in tour.iter().enumerate() {
            pos[v] = p;
            if p > 0 {
                prefix[p] = prefix[p - 1] + sc.time(tour[p - 1], v);
            }
        }
        let mut cover = vec![NONE; tour.len()];
        let mut launch_of = vec![NONE; nodes];
        let mut land_of = vec![NONE; nodes];
        let mut drone_of = vec![NONE; nodes];
        let mut sorties = Vec::with_capacity(solution.deliveries.len());
        for (s, &d) in solution.deliveries.iter().enumerate() {
            let (pi, pk) = (pos[d.launch], pos[d.rendezvous]);
            let t = prefix[pk] - prefix[pi];
            for c in &mut cover[pi + 1..=pk] {
                *c = s;
            }
            launch_of[d.launch] = s;
            land_of[d.rendezvous] = s;
            drone_of[d.customer] = s;
            sorties.push(Sortie {
                d,
                t,
                f: sc.sortie(d.launch, d.customer, d.rendezvous, t),
            });
        }
        Self {
            sc,
            tour,
            pos,
            prefix,
            sorties,
            cover,
            launch_of,
            land_of,
            drone_of,
        }
    }

    fn truck_only(&self, v: NodeId) -> bool {
        self.sc.instance.is_customer(v) && self.pos[v] != NONE && self.launch_of[v] == NONE && self.land_of[v] == NONE
    }

    /// Weight and time change of removing the node at position `p`.
    fn removal(&self, p: usize) -> (f64, f64) {
        let (u, v, w) = (self.tour[p - 1], self.tour[p], self.tour[p + 1]);
        (
            self.sc.arc(u, w) - self.sc.arc(u, v) - self.sc.arc(v, w),
            self.sc.time(u, w) - self.sc.time(u, v) - self.sc.time(v, w),
        )
    }

    /// Weight and time change of inserting `v` into the arc entering
    /// position `p`.
    fn insertion(&self, v: NodeId, p: usize) -> (f64, f64) {
        let (u, w) = (self.tour[p - 1], self.tour[p]);
        (
            self.sc.arc(u, v) + self.sc.arc(v, w) - self.sc.arc(u, w),
            self.sc.time(u, v) + self.sc.time(v, w) - self.sc.time(u, w),
        )
    }

    /// Change of sortie `s`'s term when its truck time shifts by `dt`.
    fn shifted(&self, s: usize, dt: f64) -> f64 {
        if s == NONE {
            return 0.0;
        }
        let so = &self.sorties[s];
        self.sc.sortie(so.d.launch, so.d.customer, so.d.rendezvous, so.t + dt) - so.f
    }

    fn delta(&self, mv: Move) -> Option<f64> {
        match mv {
            Move::RelocateTruck { a, b } => self.delta_relocate_truck(a, b),
            Move::RelocateDrone { a, i, k } => self.delta_relocate_drone(a, i, k),
            Move::RemoveDrone { j, k } => self.delta_remove_drone(j, k),
            Move::TwoExchange { a, b } => self.delta_two_exchange(a, b),
        }
    }

    fn delta_relocate_truck(&self, a: NodeId, b: NodeId) -> Option<f64> {
        if !self.truck_only(a) || b == 0 || b == a || self.pos[b] == NONE {
            return None;
        }
        let (pa, pb) = (self.pos[a], self.pos[b]);
        if pb == pa + 1 {
            return Some(0.0);
        }
        let (dw_rem, dt_rem) = self.removal(pa);
        let (dw_ins, dt_ins) = self.insertion(a, pb);
        let (s_rem, s_ins) = (self.cover[pa], self.cover[pb]);
        let sorties = if s_rem == s_ins {
            self.shifted(s_rem, dt_rem + dt_ins)
        } else {
            self.shifted(s_rem, dt_rem) + self.shifted(s_ins, dt_ins)
        };
        Some(dw_rem + dw_ins + sorties)
    }

    fn delta_relocate_drone(&self, a: NodeId, i: NodeId, k: NodeId) -> Option<f64> {
        if i == a || k == a || self.pos[i] == NONE || self.pos[k] == NONE || !self.sc.instance.is_feasible_delivery(i, a, k) {
            return None;
        }
        let (pi, pk) = (self.pos[i], self.pos[k]);
        if pi >= pk {
            return None;
        }
        let own = self.drone_of[a];
        if own != NONE {
            if (pi + 1..=pk).any(|p| self.cover[p] != NONE && self.cover[p] != own) {
                return None;
            }
            let t = self.prefix[pk] - self.prefix[pi];
            return Some(self.sc.sortie(i, a, k, t) - self.sorties[own].f);
        }
        if !self.truck_only(a) || (pi + 1..=pk).any(|p| self.cover[p] != NONE) {
            return None;
        }
        let pa = self.pos[a];
        let (dw, dt) = self.removal(pa);
        let t = self.prefix[pk] - self.prefix[pi] + if pi < pa && pa < pk { dt } else { 0.0 };
        Some(dw + self.shifted(self.cover[pa], dt) + self.sc.sortie(i, a, k, t))
    }

    fn delta_remove_drone(&self, j: NodeId, k: NodeId) -> Option<f64> {
        let s = self.drone_of[j];
        if s == NONE || k == 0 || self.pos[k] == NONE {
            return None;
        }
        let pk = self.pos[k];
        let (dw, dt) = self.insertion(j, pk);
        let c = self.cover[pk];
        let other = if c == s { 0.0 } else { self.shifted(c, dt) };
        Some(dw - self.sorties[s].f + other)
    }

    fn delta_two_exchange(&self, a: NodeId, b: NodeId) -> Option<f64> {
        if a == b || !self.sc.instance.is_customer(a) || !self.sc.instance.is_customer(b) {
            return None;
        }
        let swap = |v: NodeId| {
            if v == a {
                b
            } else if v == b {
                a
            } else {
                v
            }
        };
        let len = self.tour.len();
        let mut arcs = [NONE; 4];
        let mut n_arcs = 0;
        for v in [a, b] {
            let p = self.pos[v];
            if p == NONE {
                continue;
            }
            for q in [p, p + 1] {
                if q >= 1 && q < len && !arcs[..n_arcs].contains(&q) {
                    arcs[n_arcs] = q;
                    n_arcs += 1;
                }
            }
        }
        let mut touched = [(NONE, 0.0f64); 10];
        let mut n_touched = 0;
        let mut touch = |s: usize, dt: f64, touched: &mut [(usize, f64); 10]| {
            if s == NONE {
                return;
            }
            if let Some(e) = touched[..n_touched].iter_mut().find(|e| e.0 == s) {
                e.1 += dt;
            } else {
                touched[n_touched] = (s, dt);
                n_touched += 1;
            }
        };
        let mut delta = 0.0;
        for &q in &arcs[..n_arcs] {
            let (u, v) = (self.tour[q - 1], self.tour[q]);
            let (nu, nv) = (swap(u), swap(v));
            delta += self.sc.arc(nu, nv) - self.sc.arc(u, v);
            touch(self.cover[q], self.sc.time(nu, nv) - self.sc.time(u, v), &mut touched);
        }
        for v in [a, b] {
            for s in [self.launch_of[v], self.land_of[v], self.drone_of[v]] {
                touch(s, 0.0, &mut touched);
            }
        }
        for &(s, dt) in &touched[..n_touched] {
            let so = &self.sorties[s];
            let (i, j, k) = (swap(so.d.launch), swap(so.d.customer), swap(so.d.rendezvous));
            if !self.sc.instance.is_feasible_delivery(i, j, k) {
                return None;
            }
            delta += self.sc.sortie(i, j, k, so.t + dt) - so.f;
        }
        Some(delta)
    }

    /// Best strictly improving move, scanning the neighbourhoods in the order
    /// relocate-truck, relocate-drone, remove-drone, two-exchange. The first
    /// move reaching the best delta wins.
    fn best_move(&self, threshold: f64) -> Option<(Move, f64)> {
        let mut best: Option<(Move, f64)> = None;
        let consider = |mv: Move, delta: f64, best: &mut Option<(Move, f64)>| {
            if delta < threshold && best.is_none_or(|(_, d)| delta < d) {
                *best = Some((mv, delta));
            }
        };
        let len = self.tour.len();

        for pa in 1..len - 1 {
            let a = self.tour[pa];
            if !self.truck_only(a) {
                continue;
            }
            for pb in 1..len {
                if pb == pa || pb == pa + 1 {
                    continue;
                }
                let b = self.tour[pb];
                if let Some(d) = self.delta_relocate_truck(a, b) {
                    consider(Move::RelocateTruck { a, b }, d, &mut best);
                }
            }
        }

        for a in self.sc.instance.customers() {
            if !self.sc.instance.is_drone_eligible(a) {
                continue;
            }
            let own = self.drone_of[a];
            if own != NONE {
                let t0 = &self.sorties[own];
                for pi in 0..len - 1 {
                    for pk in pi + 1..len {
                        let c = self.cover[pk];
                        if c != NONE && c != own {
                            break;
                        }
                        let (i, k) = (self.tour[pi], self.tour[pk]);
                        if (i, k) == (t0.d.launch, t0.d.rendezvous) || !self.sc.instance.is_feasible_delivery(i, a, k) {
                            continue;
                        }
                        let t = self.prefix[pk] - self.prefix[pi];
                        consider(Move::RelocateDrone { a, i, k }, self.sc.sortie(i, a, k, t) - t0.f, &mut best);
                    }
                }
            } else if self.truck_only(a) {
                let pa = self.pos[a];
                let (dw, dt) = self.removal(pa);
                let base = dw + self.shifted(self.cover[pa], dt);
                for pi in 0..len - 1 {
                    if pi == pa {
                        continue;
                    }
                    for pk in pi + 1..len {
                        if self.cover[pk] != NONE {
                            break;
                        }
                        if pk == pa {
                            continue;
                        }
                        let (i, k) = (self.tour[pi], self.tour[pk]);
                        if !self.sc.instance.is_feasible_delivery(i, a, k) {
                            continue;
                        }
                        let t = self.prefix[pk] - self.prefix[pi] + if pi < pa && pa < pk { dt } else { 0.0 };
                        consider(Move::RelocateDrone { a, i, k }, base + self.sc.sortie(i, a, k, t), &mut best);
                    }
                }
            }
        }

        for s in &self.sorties {
            let j = s.d.customer;
            for pk in 1..len {
                if let Some(d) = self.delta_remove_drone(j, self.tour[pk]) {
                    consider(Move::RemoveDrone { j, k: self.tour[pk] }, d, &mut best);
                }
            }
        }

        let n = self.sc.instance.n();
        for a in 1..=n {
            if self.pos[a] == NONE && self.drone_of[a] == NONE {
                continue;
            }
            for b in a + 1..=n {
                if let Some(d) = self.delta_two_exchange(a, b) {
                    consider(Move::TwoExchange { a, b }, d, &mut best);
                }
            }
        }
        best
    }
}

/// Objective change of applying `mv` to a feasible `solution`, or `None`
/// when the move is not allowed.
pub fn move_delta(instance: &Instance, solution: &Solution, objective: Objective, mv: Move) -> Option<f64> {
    let state = State::new(Scorer::new(instance, objective), solution);
    let delta = state.delta(mv)?;
    apply_move(instance, solution, mv).map(|_| delta)
}

/// Statistics of one descent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DescentStats {
    pub moves: usize,
    pub initial: f64,
    pub final_value: f64,
}

/// Best-improvement descent over the four neighbourhoods until no move
/// improves by more than a relative 1e-9.
pub fn improve(instance: &Instance, solution: &Solution, objective: Objective) -> Result<(Solution, DescentStats), Violations> {
    validate(instance, solution)?;
    let sc = Scorer::new(instance, objective);
    let mut current = solution.clone();
    let mut value = sc.total(&current);
    let mut stats = DescentStats {
        moves: 0,
        initial: value,
        final_value: value,
    };
    loop {
        let state = State::new(sc, &current);
        let threshold = -1e-9 * value.abs().max(1.0);
        let Some((mv, delta)) = state.best_move(threshold) else {
            break;
        };
        match apply_move(instance, &current, mv) {
            Some(next) => {
                current = next;
                value += delta;
                stats.moves += 1;
            }
            None => {
                debug_assert!(false, "scored move {mv:?} failed validation");
                break;
            }
        }
    }
    stats.final_value = sc.total(&current);
    Ok((current, stats))
}
