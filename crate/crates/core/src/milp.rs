//! The mixed integer formulation of the min-cost TSP-D as data.
//!
//! [`MilpModel::build`] materializes every constraint row (2)–(36) and the
//! variable domains (37)–(45) for one instance. A solution is mapped onto
//! the variables by [`MilpModel::assign`], checked row by row, scored with
//! objective (1), or the whole model is exported in LP format.
//!
//! Variable names: `x_i_j`, `y_i_j_k`, `p_i_j`, `u_i`, `t_i`, `tp_i`
//! (drone arrival), `r_i`, `rp_i` (drone departure), `w_i`, `wp_i` (drone
//! waiting). Rows are named `c<id>_<indices>`.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{enumerate_feasible_deliveries, DroneDelivery, Instance, NodeId, Solution};

const NONE: usize = usize::MAX;
const TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("LP export is limited to {max} customers; n = {n} would need {variables} variables")]
    TooLarge { n: usize, max: usize, variables: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MilpOptions {
    /// Use the endurance row exactly as printed, which charges hover time
    /// and retrieval service against the endurance. Off by default: the
    /// row then bounds flight time only, as the rest of the crate does.
    pub literal_endurance: bool,
    /// Overrides the default big-M.
    pub big_m: Option<f64>,
    /// Largest customer count `write_lp` accepts.
    pub max_lp_customers: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            literal_endurance: false,
            big_m: None,
            max_lp_customers: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Constraint id of the domain condition.
    pub domain_id: u8,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub id: u8,
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A failed row or domain condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintViolation {
    pub id: u8,
    pub name: String,
}

/// Variable values for one solution, indexed like [`MilpModel::vars`].
#[derive(Clone, Debug)]
pub struct MilpAssignment {
    pub values: Vec<f64>,
    /// Arcs or sorties that have no variable in the model.
    pub out_of_domain: Vec<ConstraintViolation>,
}

pub struct MilpModel {
    n: usize,
    size: usize,
    big_m: f64,
    options: MilpOptions,
    deliveries: Vec<DroneDelivery>,
    vars: Vec<Var>,
    rows: Vec<Row>,
    objective: Vec<(usize, f64)>,
    x: Vec<usize>,
    p: Vec<usize>,
    y: HashMap<(NodeId, NodeId, NodeId), usize>,
    scalar: [usize; 7],
}

#[derive(Clone, Copy)]
enum Scalar {
    U = 0,
    T,
    Tp,
    R,
    Rp,
    W,
    Wp,
}

const SCALARS: [(&str, u8); 7] = [("u", 41), ("t", 42), ("tp", 43), ("r", 44), ("rp", 45), ("w", 28), ("wp", 29)];

/// Default big-M: a bound on every time difference the rows can see, plus
/// room for the position rows.
pub fn default_big_m(instance: &Instance) -> f64 {
    let m = instance.matrices();
    let size = instance.node_count();
    let mut max_time: f64 = 0.0;
    for i in 0..size {
        for j in 0..size {
            max_time = max_time.max(m.truck_time(i, j)).max(m.drone_time(i, j));
        }
    }
    let p = instance.params();
    let nodes = size as f64;
    nodes * (max_time + p.endurance + p.launch_time + p.retrieve_time) + 2.0 * nodes
}

/// Number of variables of the model: x and p over V_L × V_R, y over ℙ and
/// seven per-node continuous families.
pub fn variable_count(n: usize, feasible_deliveries: usize) -> usize {
    2 * ((n + 1) * (n + 1) - n) + feasible_deliveries + 7 * (n + 2)
}

impl MilpModel {
    pub fn build(instance: &Instance, options: MilpOptions) -> Self {
        let n = instance.n();
        let size = n + 2;
        let end = n + 1;
        let big_m = options.big_m.unwrap_or_else(|| default_big_m(instance));
        let deliveries = enumerate_feasible_deliveries(instance);
        let mut model = MilpModel {
            n,
            size,
            big_m,
            options,
            deliveries: deliveries.clone(),
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            x: vec![NONE; size * size],
            p: vec![NONE; size * size],
            y: HashMap::new(),
            scalar: [0; 7],
        };

        for i in 0..=n {
            for j in 1..=end {
                if i != j {
                    model.x[i * size + j] = model.push_var(format!("x_{i}_{j}"), VarKind::Binary, 0.0, 1.0, 37);
                }
            }
        }
        for d in &deliveries {
            let id = model.push_var(
                format!("y_{}_{}_{}", d.launch, d.customer, d.rendezvous),
                VarKind::Binary,
                0.0,
                1.0,
                38,
            );
            model.y.insert((d.launch, d.customer, d.rendezvous), id);
        }
        for i in 0..=n {
            for j in 1..=end {
                if i != j {
                    let (lo, id) = if i == 0 { (1.0, 40) } else { (0.0, 39) };
                    model.p[i * size + j] = model.push_var(format!("p_{i}_{j}"), VarKind::Binary, lo, 1.0, id);
                }
            }
        }
        for (s, (prefix, domain)) in SCALARS.iter().enumerate() {
            model.scalar[s] = model.vars.len();
            let upper = if s == Scalar::U as usize { end as f64 } else { f64::INFINITY };
            for i in 0..size {
                model.push_var(format!("{prefix}_{i}"), VarKind::Continuous, 0.0, upper, *domain);
            }
        }

        model.build_objective(instance);
        model.build_rows(instance);
        model
    }

    fn push_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, domain_id: u8) -> usize {
        self.vars.push(Var {
            name,
            kind,
            lower,
            upper,
            domain_id,
        });
        self.vars.len() - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective_terms(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn feasible_deliveries(&self) -> &[DroneDelivery] {
        &self.deliveries
    }

    pub fn x(&self, i: NodeId, j: NodeId) -> Option<usize> {
        (i < self.size && j < self.size)
            .then(|| self.x[i * self.size + j])
            .filter(|&v| v != NONE)
    }

    pub fn p(&self, i: NodeId, j: NodeId) -> Option<usize> {
        (i < self.size && j < self.size)
            .then(|| self.p[i * self.size + j])
            .filter(|&v| v != NONE)
    }

    pub fn y(&self, i: NodeId, j: NodeId, k: NodeId) -> Option<usize> {
        self.y.get(&(i, j, k)).copied()
    }

    fn s(&self, which: Scalar, i: NodeId) -> usize {
        self.scalar[which as usize] + i
    }

    pub fn u(&self, i: NodeId) -> usize {
        self.s(Scalar::U, i)
    }
    pub fn t(&self, i: NodeId) -> usize {
        self.s(Scalar::T, i)
    }
    pub fn tp(&self, i: NodeId) -> usize {
        self.s(Scalar::Tp, i)
    }
    pub fn r(&self, i: NodeId) -> usize {
        self.s(Scalar::R, i)
    }
    pub fn rp(&self, i: NodeId) -> usize {
        self.s(Scalar::Rp, i)
    }
    pub fn w(&self, i: NodeId) -> usize {
        self.s(Scalar::W, i)
    }
    pub fn wp(&self, i: NodeId) -> usize {
        self.s(Scalar::Wp, i)
    }

    fn build_objective(&mut self, instance: &Instance) {
        let m = instance.matrices();
        let p = instance.params();
        let mut obj = Vec::new();
        for i in 0..=self.n {
            for j in 1..=self.n + 1 {
                if let Some(v) = self.x(i, j) {
                    obj.push((v, p.truck_cost * m.truck_dist(i, j)));
                }
            }
        }
        for d in &self.deliveries {
            let legs = m.drone_dist(d.launch, d.customer) + m.drone_dist(d.customer, d.rendezvous);
            obj.push((self.y[&(d.launch, d.customer, d.rendezvous)], p.drone_cost * legs));
        }
        for i in 0..self.size {
            obj.push((self.w(i), p.truck_wait_fee));
            obj.push((self.wp(i), p.drone_wait_fee));
        }
        self.objective = obj;
    }

    fn row(&mut self, id: u8, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            id,
            name,
            terms,
            sense,
            rhs,
        });
    }

    fn build_rows(&mut self, instance: &Instance) {
        let n = self.n;
        let end = n + 1;
        let size = self.size;
        let big_m = self.big_m;
        let np2 = (n + 2) as f64;
        let mat = instance.matrices();
        let params = *instance.params();
        let ys: Vec<(DroneDelivery, usize)> = self
            .deliveries
            .iter()
            .map(|d| (*d, self.y[&(d.launch, d.customer, d.rendezvous)]))
            .collect();
        let by_launch = |i: NodeId| ys.iter().filter(move |(d, _)| d.launch == i);
        let by_land = |k: NodeId| ys.iter().filter(move |(d, _)| d.rendezvous == k);
        let by_drone = |j: NodeId| ys.iter().filter(move |(d, _)| d.customer == j);
        let in_x = |model: &Self, j: NodeId, coef: f64, skip: &dyn Fn(NodeId) -> bool| -> Vec<(usize, f64)> {
            (0..=n)
                .filter(|&h| h != j && !skip(h))
                .filter_map(|h| model.x(h, j).map(|v| (v, coef)))
                .collect()
        };

        // (2) every customer served once
        for j in 1..=n {
            let mut terms = in_x(self, j, 1.0, &|_| false);
            terms.extend(by_drone(j).map(|&(_, v)| (v, 1.0)));
            self.row(2, format!("c2_{j}"), terms, Sense::Eq, 1.0);
        }
        // (3), (4) leave and return to the depot
        let terms = (1..=end).filter_map(|j| self.x(0, j).map(|v| (v, 1.0))).collect();
        self.row(3, "c3".into(), terms, Sense::Eq, 1.0);
        let terms = in_x(self, end, 1.0, &|_| false);
        self.row(4, "c4".into(), terms, Sense::Eq, 1.0);
        // (5) subtour elimination
        for i in 0..=n {
            for j in 1..=end {
                if let Some(x) = self.x(i, j) {
                    let terms = vec![(self.u(i), 1.0), (self.u(j), -1.0), (x, np2)];
                    self.row(5, format!("c5_{i}_{j}"), terms, Sense::Le, np2 - 1.0);
                }
            }
        }
        // (6) flow conservation
        for j in 1..=n {
            let mut terms = in_x(self, j, 1.0, &|_| false);
            terms.extend((1..=end).filter(|&k| k != j).filter_map(|k| self.x(j, k).map(|v| (v, -1.0))));
            self.row(6, format!("c6_{j}"), terms, Sense::Eq, 0.0);
        }
        // (7), (8) sortie endpoints lie on the truck route
        for &(d, y) in &ys {
            let (i, j, k) = (d.launch, d.customer, d.rendezvous);
            if i != 0 {
                let mut terms = vec![(y, 2.0)];
                terms.extend(in_x(self, i, -1.0, &|_| false));
                terms.extend(in_x(self, k, -1.0, &|h| h == 0));
                self.row(7, format!("c7_{i}_{j}_{k}"), terms, Sense::Le, 0.0);
            } else {
                let mut terms = vec![(y, 1.0)];
                terms.extend(in_x(self, k, -1.0, &|h| h == j));
                self.row(8, format!("c8_{j}_{k}"), terms, Sense::Le, 0.0);
            }
        }
        // (9) launch before rendezvous
        for i in 0..=n {
            for k in 1..=end {
                if k == i {
                    continue;
                }
                let mut terms = vec![(self.u(k), 1.0), (self.u(i), -1.0)];
                terms.extend(by_launch(i).filter(|(d, _)| d.rendezvous == k).map(|&(_, v)| (v, -np2)));
                self.row(9, format!("c9_{i}_{k}"), terms, Sense::Ge, 1.0 - np2);
            }
        }
        // (10), (11) one launch and one retrieval per node
        for i in 0..=n {
            let terms = by_launch(i).map(|&(_, v)| (v, 1.0)).collect();
            self.row(10, format!("c10_{i}"), terms, Sense::Le, 1.0);
        }
        for k in 1..=end {
            let terms = by_land(k).map(|&(_, v)| (v, 1.0)).collect();
            self.row(11, format!("c11_{k}"), terms, Sense::Le, 1.0);
        }
        // (12), (13) p agrees with positions of truck nodes
        for i in 1..=n {
            for j in 1..=end {
                let Some(p) = self.p(i, j) else {
                    continue;
                };
                let mut guard = in_x(self, i, big_m, &|_| false);
                guard.extend(in_x(self, j, big_m, &|h| h == 0));
                let mut ge = vec![(self.u(i), 1.0), (self.u(j), -1.0), (p, np2)];
                ge.extend(guard.iter().map(|&(v, c)| (v, -c)));
                self.row(12, format!("c12_{i}_{j}"), ge, Sense::Ge, 1.0 - 2.0 * big_m);
                let mut le = vec![(self.u(i), 1.0), (self.u(j), -1.0), (p, np2)];
                le.extend(guard);
                self.row(13, format!("c13_{i}_{j}"), le, Sense::Le, np2 - 1.0 + 2.0 * big_m);
            }
        }
        // (14), (15) the depot precedes every truck node
        for j in 1..=end {
            let p = self.p(0, j).expect("p_0j exists");
            let guard = in_x(self, j, big_m, &|_| false);
            let mut ge = vec![(self.u(0), 1.0), (self.u(j), -1.0), (p, np2)];
            ge.extend(guard.iter().map(|&(v, c)| (v, -c)));
            self.row(14, format!("c14_{j}"), ge, Sense::Ge, 1.0 - big_m);
            let mut le = vec![(self.u(0), 1.0), (self.u(j), -1.0), (p, np2)];
            le.extend(guard);
            self.row(15, format!("c15_{j}"), le, Sense::Le, np2 - 1.0 + big_m);
        }
        // (16) no launch while the drone is airborne
        for i in 0..=n {
            for k in 1..=end {
                if k == i {
                    continue;
                }
                for l in 1..=n {
                    if l == i || l == k {
                        continue;
                    }
                    let Some(p) = self.p(i, l) else {
                        continue;
                    };
                    let mut terms = vec![(self.u(l), 1.0), (self.u(k), -1.0), (p, -big_m)];
                    terms.extend(
                        by_launch(i)
                            .filter(|(d, _)| d.rendezvous == k && d.customer != l)
                            .map(|&(_, v)| (v, -big_m)),
                    );
                    terms.extend(
                        by_launch(l)
                            .filter(|(d, _)| ![i, k, l].contains(&d.customer) && ![i, k].contains(&d.rendezvous))
                            .map(|&(_, v)| (v, -big_m)),
                    );
                    self.row(16, format!("c16_{i}_{k}_{l}"), terms, Sense::Ge, -3.0 * big_m);
                }
            }
        }
        // (17), (18) truck arrival follows truck departure
        for i in 0..=n {
            for k in 1..=end {
                let Some(x) = self.x(i, k) else {
                    continue;
                };
                let tau = mat.truck_time(i, k);
                let base = [(self.t(k), 1.0), (self.r(i), -1.0)];
                let mut ge = base.to_vec();
                ge.push((x, -big_m));
                self.row(17, format!("c17_{i}_{k}"), ge, Sense::Ge, tau - big_m);
                let mut le = base.to_vec();
                le.push((x, big_m));
                self.row(18, format!("c18_{i}_{k}"), le, Sense::Le, tau + big_m);
            }
        }
        let eligible = instance.drone_eligible();
        // (19), (20) drone arrival at its customer
        for &j in &eligible {
            for i in 0..=n {
                if i == j {
                    continue;
                }
                let tau = mat.drone_time(i, j);
                let sum: Vec<(usize, f64)> = by_launch(i).filter(|(d, _)| d.customer == j).map(|&(_, v)| (v, 1.0)).collect();
                let mut ge = vec![(self.tp(j), 1.0), (self.r(i), -1.0)];
                ge.extend(sum.iter().map(|&(v, _)| (v, -big_m)));
                self.row(19, format!("c19_{j}_{i}"), ge, Sense::Ge, tau - big_m);
                let mut le = vec![(self.tp(j), 1.0), (self.r(i), -1.0)];
                le.extend(sum.iter().map(|&(v, _)| (v, big_m)));
                self.row(20, format!("c20_{j}_{i}"), le, Sense::Le, tau + big_m);
            }
        }
        // (21), (22) drone arrival at the rendezvous
        for &j in &eligible {
            for k in 1..=end {
                if k == j {
                    continue;
                }
                let tau = mat.drone_time(j, k);
                let sum: Vec<(usize, f64)> = by_drone(j).filter(|(d, _)| d.rendezvous == k).map(|&(_, v)| (v, 1.0)).collect();
                let mut ge = vec![(self.tp(k), 1.0), (self.rp(j), -1.0)];
                ge.extend(sum.iter().map(|&(v, _)| (v, -big_m)));
                self.row(21, format!("c21_{j}_{k}"), ge, Sense::Ge, tau - big_m);
                let mut le = vec![(self.tp(k), 1.0), (self.rp(j), -1.0)];
                le.extend(sum.iter().map(|&(v, _)| (v, big_m)));
                self.row(22, format!("c22_{j}_{k}"), le, Sense::Le, tau + big_m);
            }
        }
        // (23), (24) the drone does not linger at its customer
        for j in 1..=n {
            let sum: Vec<usize> = by_drone(j).map(|&(_, v)| v).collect();
            let mut ge = vec![(self.tp(j), 1.0), (self.rp(j), -1.0)];
            ge.extend(sum.iter().map(|&v| (v, -big_m)));
            self.row(23, format!("c23_{j}"), ge, Sense::Ge, -big_m);
            let mut le = vec![(self.tp(j), 1.0), (self.rp(j), -1.0)];
            le.extend(sum.iter().map(|&v| (v, big_m)));
            self.row(24, format!("c24_{j}"), le, Sense::Le, big_m);
        }
        // (25), (26) departures include service times at rendezvous nodes
        for k in 1..=end {
            let launches: Vec<usize> = by_launch(k)
                .filter(|(d, _)| d.customer != k && d.rendezvous != k)
                .map(|&(_, v)| v)
                .collect();
            let lands: Vec<usize> = by_land(k).filter(|(d, _)| d.launch != k).map(|&(_, v)| v).collect();
            for (id, dep, arr, tag) in [(25u8, self.r(k), self.t(k), "c25"), (26, self.rp(k), self.tp(k), "c26")] {
                let mut terms = vec![(dep, 1.0), (arr, -1.0)];
                terms.extend(launches.iter().map(|&v| (v, -params.launch_time)));
                terms.extend(lands.iter().map(|&v| (v, -params.retrieve_time - big_m)));
                self.row(id, format!("{tag}_{k}"), terms, Sense::Ge, -big_m);
            }
        }
        // (27) endurance, one row per feasible sortie
        for &(d, y) in &ys {
            let (i, j, k) = (d.launch, d.customer, d.rendezvous);
            let tau_ij = mat.drone_time(i, j);
            let mut terms = Vec::new();
            if self.options.literal_endurance {
                terms.push((self.rp(k), 1.0));
                terms.push((self.rp(j), -1.0));
                terms.extend(
                    by_launch(k)
                        .filter(|(e, _)| ![i, j, k].contains(&e.customer) && ![k, i, e.customer].contains(&e.rendezvous))
                        .map(|&(_, v)| (v, -params.launch_time)),
                );
            } else {
                terms.push((self.tp(k), 1.0));
                terms.push((self.rp(j), -1.0));
            }
            terms.push((y, big_m));
            self.row(27, format!("c27_{i}_{j}_{k}"), terms, Sense::Le, params.endurance + big_m - tau_ij);
        }
        // (28)-(31) waiting times
        for k in 1..=end {
            self.row(28, format!("c28_{k}"), vec![(self.w(k), 1.0)], Sense::Ge, 0.0);
            self.row(29, format!("c29_{k}"), vec![(self.wp(k), 1.0)], Sense::Ge, 0.0);
        }
        for k in 1..=end {
            let terms = vec![(self.w(k), 1.0), (self.tp(k), -1.0), (self.t(k), 1.0)];
            self.row(30, format!("c30_{k}"), terms, Sense::Ge, 0.0);
        }
        for k in 1..=end {
            let terms = vec![(self.wp(k), 1.0), (self.t(k), -1.0), (self.tp(k), 1.0)];
            self.row(31, format!("c31_{k}"), terms, Sense::Ge, 0.0);
        }
        // (32)-(36) start conditions and synchronized departures
        self.row(32, "c32".into(), vec![(self.w(0), 1.0)], Sense::Eq, 0.0);
        self.row(33, "c33".into(), vec![(self.wp(0), 1.0)], Sense::Eq, 0.0);
        for i in 0..size {
            self.row(34, format!("c34_{i}"), vec![(self.r(i), 1.0), (self.rp(i), -1.0)], Sense::Eq, 0.0);
        }
        self.row(35, "c35_t".into(), vec![(self.t(0), 1.0)], Sense::Eq, 0.0);
        self.row(35, "c35_tp".into(), vec![(self.tp(0), 1.0)], Sense::Eq, 0.0);
        self.row(36, "c36_r".into(), vec![(self.r(0), 1.0)], Sense::Eq, 0.0);
        self.row(36, "c36_rp".into(), vec![(self.rp(0), 1.0)], Sense::Eq, 0.0);
    }

    /// Maps a solution, feasible or not, onto the variables.
    pub fn assign(&self, instance: &Instance, solution: &Solution) -> MilpAssignment {
        let size = self.size;
        let valid = |v: NodeId| v < size;
        let mut values = vec![0.0; self.vars.len()];
        let mut out_of_domain = Vec::new();
        let tour = &solution.truck_tour;

        for w in tour.windows(2) {
            match self.x(w[0], w[1]) {
                Some(v) => values[v] += 1.0,
                None => out_of_domain.push(ConstraintViolation {
                    id: 37,
                    name: format!("x_{}_{}", w[0], w[1]),
                }),
            }
        }
        for d in &solution.deliveries {
            match self.y(d.launch, d.customer, d.rendezvous) {
                Some(v) => values[v] += 1.0,
                None => out_of_domain.push(ConstraintViolation {
                    id: 38,
                    name: format!("y_{}_{}_{}", d.launch, d.customer, d.rendezvous),
                }),
            }
        }

        let mut u = vec![0.0; size];
        for (pos, &v) in tour.iter().enumerate() {
            if valid(v) {
                u[v] = pos as f64;
            }
        }
        for d in &solution.deliveries {
            if valid(d.launch) && valid(d.customer) && !tour.contains(&d.customer) {
                u[d.customer] = u[d.launch];
            }
        }
        for i in 0..size {
            values[self.u(i)] = u[i];
        }
        for i in 0..=self.n {
            for j in 1..size {
                if let Some(p) = self.p(i, j) {
                    values[p] = if i == 0 || u[i] < u[j] { 1.0 } else { 0.0 };
                }
            }
        }

        let times = propagate(instance, solution);
        let shift = times.shift;
        for v in 0..size {
            let (t, tp, r) = (times.t[v] - shift, times.tp[v] - shift, times.r[v] - shift);
            values[self.t(v)] = t;
            values[self.tp(v)] = tp;
            values[self.r(v)] = r;
            values[self.rp(v)] = r;
            values[self.w(v)] = (tp - t).max(0.0);
            values[self.wp(v)] = (t - tp).max(0.0);
        }
        for f in [self.t(0), self.tp(0), self.r(0), self.rp(0), self.w(0), self.wp(0)] {
            values[f] = 0.0;
        }
        MilpAssignment { values, out_of_domain }
    }

    /// Every violated row or domain condition, in model order.
    pub fn check(&self, assignment: &MilpAssignment) -> Vec<ConstraintViolation> {
        let vals = &assignment.values;
        let mut out = assignment.out_of_domain.clone();
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = row.rhs.abs().max(1.0);
            for &(v, c) in &row.terms {
                lhs += c * vals[v];
                scale = scale.max((c * vals[v]).abs());
            }
            let tol = TOL * scale;
            let bad = match row.sense {
                Sense::Le => lhs > row.rhs + tol,
                Sense::Ge => lhs < row.rhs - tol,
                Sense::Eq => (lhs - row.rhs).abs() > tol,
            };
            if bad {
                out.push(ConstraintViolation {
                    id: row.id,
                    name: row.name.clone(),
                });
            }
        }
        for (v, var) in self.vars.iter().enumerate() {
            let x = vals[v];
            let tol = TOL * x.abs().max(1.0);
            let binary_bad = var.kind == VarKind::Binary && (x - x.round()).abs() > tol;
            if binary_bad || x < var.lower - tol || x > var.upper + tol {
                out.push(ConstraintViolation {
                    id: var.domain_id,
                    name: var.name.clone(),
                });
            }
        }
        out
    }

    /// Objective (1) at `assignment`.
    pub fn objective_value(&self, assignment: &MilpAssignment) -> f64 {
        self.objective.iter().map(|&(v, c)| c * assignment.values[v]).sum()
    }

    /// The model in LP format.
    pub fn write_lp(&self) -> Result<String, MilpError> {
        if self.n > self.options.max_lp_customers {
            return Err(MilpError::TooLarge {
                n: self.n,
                max: self.options.max_lp_customers,
                variables: self.vars.len(),
            });
        }
        let mut out = String::new();
        out.push_str("\\ min-cost TSP-D\nMinimize\n");
        write_expr(&mut out, " obj:", &self.objective, &self.vars);
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            write_expr(&mut out, &format!(" {}:", row.name), &merge(&row.terms), &self.vars);
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {sense} {}", fmt_num(row.rhs));
        }
        out.push_str("Bounds\n");
        for var in &self.vars {
            if var.kind == VarKind::Binary {
                if var.lower == var.upper {
                    let _ = writeln!(out, " {} = {}", var.name, fmt_num(var.lower));
                }
                continue;
            }
            if var.upper.is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", fmt_num(var.lower), var.name, fmt_num(var.upper));
            }
        }
        out.push_str("Binaries\n");
        let mut line = String::new();
        for var in self.vars.iter().filter(|v| v.kind == VarKind::Binary) {
            if line.len() + var.name.len() > 200 {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            line.push(' ');
            line.push_str(&var.name);
        }
        if !line.is_empty() {
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("End\n");
        Ok(out)
    }
}

fn merge(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(v, c) in terms {
        match merged.iter_mut().find(|e| e.0 == v) {
            Some(e) => e.1 += c,
            None => merged.push((v, c)),
        }
    }
    merged.retain(|e| e.1 != 0.0);
    merged
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn write_expr(out: &mut String, label: &str, terms: &[(usize, f64)], vars: &[Var]) {
    let mut line = String::from(label);
    if terms.is_empty() {
        line.push_str(" 0 u_0");
    }
    for (idx, &(v, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { "-" } else { "+" };
        let term = if c.abs() == 1.0 {
            format!(" {sign} {}", vars[v].name)
        } else {
            format!(" {sign} {} {}", fmt_num(c.abs()), vars[v].name)
        };
        let term = if idx == 0 && c >= 0.0 { term.replacen(" + ", " ", 1) } else { term };
        if line.len() + term.len() > 200 {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&term);
    }
    out.push_str(&line);
}

struct Times {
    t: Vec<f64>,
    tp: Vec<f64>,
    r: Vec<f64>,
    shift: f64,
}

/// Timeline of a possibly malformed solution. Unknown ids are skipped and
/// only the first sortie launched or retrieved at a node is honoured.
fn propagate(instance: &Instance, solution: &Solution) -> Times {
    let size = instance.node_count();
    let m = instance.matrices();
    let p = instance.params();
    let ok = |v: NodeId| v < size;
    let mut t = vec![0.0; size];
    let mut tp = vec![0.0; size];
    let mut r = vec![0.0; size];
    let sorties: Vec<&DroneDelivery> = solution
        .deliveries
        .iter()
        .filter(|d| ok(d.launch) && ok(d.customer) && ok(d.rendezvous))
        .collect();
    let mut launched: Vec<Option<f64>> = vec![None; sorties.len()];

    let mut clock: Option<(NodeId, f64)> = None;
    for &v in &solution.truck_tour {
        if !ok(v) {
            continue;
        }
        let arrive = match clock {
            Some((u, dep)) => dep + m.truck_time(u, v),
            None => 0.0,
        };
        t[v] = arrive;
        tp[v] = arrive;
        let mut ready = arrive;
        if let Some(s) = (0..sorties.len()).find(|&s| sorties[s].rendezvous == v && launched[s].is_some()) {
            let d = sorties[s];
            let drone = launched[s].unwrap() + m.drone_time(d.launch, d.customer) + m.drone_time(d.customer, v);
            tp[v] = drone;
            ready = arrive.max(drone) + p.retrieve_time;
        }
        if let Some(s) = (0..sorties.len()).find(|&s| sorties[s].launch == v && launched[s].is_none()) {
            ready += p.launch_time;
            launched[s] = Some(ready);
            let d = sorties[s];
            let at = ready + m.drone_time(v, d.customer);
            t[d.customer] = at;
            tp[d.customer] = at;
            r[d.customer] = at;
        }
        r[v] = ready;
        clock = Some((v, ready));
    }
    let shift = if sorties.iter().zip(&launched).any(|(d, l)| d.launch == 0 && l.is_some()) {
        p.launch_time
    } else {
        0.0
    };
    Times { t, tp, r, shift }
}

/// Convenience wrapper: builds the model, assigns and checks.
pub fn check_constraints(instance: &Instance, solution: &Solution, options: MilpOptions) -> Vec<ConstraintViolation> {
    let model = MilpModel::build(instance, options);
    model.check(&model.assign(instance, solution))
}
