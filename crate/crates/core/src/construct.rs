//! Giant-tour constructors: randomized greedy builders, an exact
//! Held-Karp search for small instances and a 2-opt/Or-opt improver used to
//! compute reference TSP tours.
//!
//! Every tour starts at `0`, ends at `n + 1` and uses truck distances.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, NodeId};

/// Largest customer count accepted by [`exact_tsp`].
pub const EXACT_TSP_LIMIT: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum ConstructError {
    #[error("exact TSP is limited to {max} customers, instance has {n}")]
    TooLarge { n: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constructor {
    KNearestNeighbour,
    KCheapestInsertion,
    RandomInsertion,
}

impl Constructor {
    pub const ALL: [Constructor; 3] = [
        Constructor::KNearestNeighbour,
        Constructor::KCheapestInsertion,
        Constructor::RandomInsertion,
    ];

    /// `k` is ignored by random insertion.
    pub fn build<R: Rng + ?Sized>(self, instance: &Instance, k: usize, rng: &mut R) -> Vec<NodeId> {
        match self {
            Constructor::KNearestNeighbour => k_nearest_neighbour(instance, k, rng),
            Constructor::KCheapestInsertion => k_cheapest_insertion(instance, k, rng),
            Constructor::RandomInsertion => random_insertion(instance, rng),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constructor::KNearestNeighbour => "knn",
            Constructor::KCheapestInsertion => "kcheapest",
            Constructor::RandomInsertion => "random",
        }
    }
}

impl fmt::Display for Constructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Constructor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "knn" | "k_nearest_neighbour" => Ok(Constructor::KNearestNeighbour),
            "kcheapest" | "k_cheapest_insertion" => Ok(Constructor::KCheapestInsertion),
            "random" | "random_insertion" => Ok(Constructor::RandomInsertion),
            _ => Err(format!("unknown constructor `{s}` (expected knn, kcheapest or random)")),
        }
    }
}

/// Truck distance along `tour`.
pub fn tour_length(instance: &Instance, tour: &[NodeId]) -> f64 {
    let m = instance.matrices();
    tour.windows(2).map(|w| m.truck_dist(w[0], w[1])).sum()
}

/// Insertion cost of `v` between `i` and `j`.
#[inline]
pub fn insertion_cost(instance: &Instance, i: NodeId, v: NodeId, j: NodeId) -> f64 {
    let m = instance.matrices();
    m.truck_dist(i, v) + m.truck_dist(v, j) - m.truck_dist(i, j)
}

/// From the current node, moves to one of the `k` nearest unvisited customers
/// chosen uniformly.
pub fn k_nearest_neighbour<R: Rng + ?Sized>(instance: &Instance, k: usize, rng: &mut R) -> Vec<NodeId> {
    let m = instance.matrices();
    let k = k.max(1);
    let mut unvisited: Vec<NodeId> = instance.customers().collect();
    let mut tour = Vec::with_capacity(instance.node_count());
    tour.push(0);
    let mut cur = 0;
    while !unvisited.is_empty() {
        unvisited.sort_by(|&a, &b| m.truck_dist(cur, a).total_cmp(&m.truck_dist(cur, b)).then(a.cmp(&b)));
        let pick = rng.gen_range(0..k.min(unvisited.len()));
        cur = unvisited.remove(pick);
        tour.push(cur);
    }
    tour.push(instance.end_depot());
    tour
}

/// Repeatedly inserts one of the `k` cheapest (node, edge) pairs, chosen
/// uniformly. Ties prefer the lower node, then the earlier edge.
pub fn k_cheapest_insertion<R: Rng + ?Sized>(instance: &Instance, k: usize, rng: &mut R) -> Vec<NodeId> {
    let k = k.max(1);
    let mut tour = vec![0, instance.end_depot()];
    let mut unvisited: Vec<NodeId> = instance.customers().collect();
    let mut best: Vec<(f64, NodeId, usize)> = Vec::with_capacity(k + 1);
    while !unvisited.is_empty() {
        best.clear();
        for &v in &unvisited {
            for p in 0..tour.len() - 1 {
                let ic = insertion_cost(instance, tour[p], v, tour[p + 1]);
                if best.len() == k && ic >= best[k - 1].0 {
                    continue;
                }
                // unvisited is ascending and edges are scanned in order, so an
                // equal cost never displaces an earlier candidate
                let at = best.partition_point(|c| c.0 <= ic);
                best.insert(at, (ic, v, p));
                best.truncate(k);
            }
        }
        let (_, v, p) = best[rng.gen_range(0..best.len())];
        tour.insert(p + 1, v);
        unvisited.retain(|&u| u != v);
    }
    tour
}

/// Inserts uniformly chosen customers at their cheapest position.
pub fn random_insertion<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Vec<NodeId> {
    let mut tour = vec![0, instance.end_depot()];
    let mut unvisited: Vec<NodeId> = instance.customers().collect();
    while !unvisited.is_empty() {
        let v = unvisited.remove(rng.gen_range(0..unvisited.len()));
        let mut at = 0;
        let mut cost = f64::INFINITY;
        for p in 0..tour.len() - 1 {
            let ic = insertion_cost(instance, tour[p], v, tour[p + 1]);
            if ic < cost {
                cost = ic;
                at = p;
            }
        }
        tour.insert(at + 1, v);
    }
    tour
}

/// Shortest truck tour by Held-Karp dynamic programming.
pub fn exact_tsp(instance: &Instance) -> Result<Vec<NodeId>, ConstructError> {
    let n = instance.n();
    if n > EXACT_TSP_LIMIT {
        return Err(ConstructError::TooLarge { n, max: EXACT_TSP_LIMIT });
    }
    let m = instance.matrices();
    let full = (1usize << n) - 1;
    // dp[mask * n + last]: shortest path from the depot through `mask` ending
    // at customer `last + 1`
    let mut dp = vec![f64::INFINITY; (full + 1) * n];
    let mut parent = vec![u8::MAX; (full + 1) * n];
    for c in 0..n {
        dp[(1 << c) * n + c] = m.truck_dist(0, c + 1);
    }
    for mask in 1..=full {
        for last in 0..n {
            let cur = dp[mask * n + last];
            if mask & (1 << last) == 0 || !cur.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = cur + m.truck_dist(last + 1, next + 1);
                if cand < dp[nm * n + next] {
                    dp[nm * n + next] = cand;
                    parent[nm * n + next] = last as u8;
                }
            }
        }
    }
    let end = instance.end_depot();
    let mut last = 0;
    let mut best = f64::INFINITY;
    for c in 0..n {
        let cand = dp[full * n + c] + m.truck_dist(c + 1, end);
        if cand < best {
            best = cand;
            last = c;
        }
    }
    let mut rev = vec![end];
    let mut mask = full;
    loop {
        rev.push(last + 1);
        let p = parent[mask * n + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    rev.push(0);
    rev.reverse();
    Ok(rev)
}

/// 2-opt and Or-opt descent with fixed endpoints, first improvement.
pub fn improve_tour(instance: &Instance, tour: &mut [NodeId]) {
    let m = instance.matrices();
    let d = |a: NodeId, b: NodeId| m.truck_dist(a, b);
    let len = tour.len();
    let eps = 1e-10;
    loop {
        let mut improved = false;
        // 2-opt: reverse tour[i..=j]
        for i in 1..len - 1 {
            for j in i + 1..len - 1 {
                let delta = d(tour[i - 1], tour[j]) + d(tour[i], tour[j + 1]) - d(tour[i - 1], tour[i]) - d(tour[j], tour[j + 1]);
                if delta < -eps {
                    tour[i..=j].reverse();
                    improved = true;
                }
            }
        }
        // Or-opt: move a segment of up to three nodes elsewhere
        for seg in 1..=3usize {
            let mut i = 1;
            while i + seg < len {
                let (first, last) = (tour[i], tour[i + seg - 1]);
                let (before, after) = (tour[i - 1], tour[i + seg]);
                let removal = d(before, first) + d(last, after) - d(before, after);
                let mut moved = false;
                for p in 0..len - 1 {
                    if p + 1 >= i && p < i + seg {
                        continue;
                    }
                    let (u, w) = (tour[p], tour[p + 1]);
                    let gain = removal - (d(u, first) + d(last, w) - d(u, w));
                    if gain > eps {
                        let segment: Vec<NodeId> = tour[i..i + seg].to_vec();
                        let mut rest: Vec<NodeId> = tour[..i].iter().chain(&tour[i + seg..]).copied().collect();
                        let at = if p < i { p + 1 } else { p + 1 - seg };
                        rest.splice(at..at, segment);
                        tour.copy_from_slice(&rest);
                        improved = true;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    i += 1;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Optimal tour for small instances, otherwise the shortest of 50 improved
/// constructor runs.
pub fn best_known_tour(instance: &Instance, seed: u64) -> Vec<NodeId> {
    if let Ok(tour) = exact_tsp(instance) {
        return tour;
    }
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    for run in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        let ctor = Constructor::ALL[(run % 3) as usize];
        let k = *[2usize, 3].choose(&mut rng).expect("non-empty");
        let mut tour = ctor.build(instance, k, &mut rng);
        improve_tour(instance, &mut tour);
        let len = tour_length(instance, &tour);
        if best.as_ref().is_none_or(|(l, _)| len < *l) {
            best = Some((len, tour));
        }
    }
    best.expect("fifty runs").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostParams, Point};
    use std::collections::HashSet;

    fn instance(points: &[(f64, f64)]) -> Instance {
        let pts = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Instance::new("t", 100.0, pts, [], CostParams::default()).unwrap()
    }

    fn random_instance(n: usize, seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = vec![(0.0, 0.0)];
        pts.extend((0..n).map(|_| (rng.gen::<f64>() * 10.0, rng.gen::<f64>() * 10.0)));
        instance(&pts)
    }

    fn is_tour(inst: &Instance, tour: &[NodeId]) -> bool {
        let mut sorted = tour.to_vec();
        sorted.sort_unstable();
        sorted == (0..inst.node_count()).collect::<Vec<_>>() && tour[0] == 0 && *tour.last().unwrap() == inst.end_depot()
    }

    fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    fn brute_force_length(inst: &Instance) -> f64 {
        let customers: Vec<NodeId> = inst.customers().collect();
        permutations(&customers)
            .into_iter()
            .map(|p| {
                let mut t = vec![0];
                t.extend(p);
                t.push(inst.end_depot());
                tour_length(inst, &t)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn greedy_nearest_neighbour_on_a_line() {
        let inst = instance(&[(0.0, 0.0), (3.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(k_nearest_neighbour(&inst, 1, &mut rng), vec![0, 2, 3, 1, 4]);
    }

    #[test]
    fn nearest_neighbour_with_k_n_reaches_every_order() {
        let inst = instance(&[(0.0, 0.0), (1.0, 0.0), (2.0, 3.0), (5.0, 1.0), (4.0, 4.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seen: HashSet<Vec<NodeId>> = (0..2000).map(|_| k_nearest_neighbour(&inst, 4, &mut rng)).collect();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn constructors_are_seeded() {
        let inst = random_instance(12, 3);
        for ctor in Constructor::ALL {
            let a = ctor.build(&inst, 3, &mut ChaCha8Rng::seed_from_u64(9));
            let b = ctor.build(&inst, 3, &mut ChaCha8Rng::seed_from_u64(9));
            assert_eq!(a, b);
            assert!(is_tour(&inst, &a));
        }
    }

    #[test]
    fn insertion_cost_arithmetic() {
        let inst = instance(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(insertion_cost(&inst, 0, 1, 2), 0.0);
    }

    #[test]
    fn cheapest_insertion_trace() {
        // depot (0,0); customers (4,0), (1,0), (1,2). From {0, end} the
        // costs are 8, 2, 6 -> insert 2. Then 3 costs 4 on both edges and 1
        // costs 6, so 3 goes on the earlier edge. Finally 1 costs 6 on all
        // three edges and takes the first.
        let inst = instance(&[(0.0, 0.0), (4.0, 0.0), (1.0, 0.0), (1.0, 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(k_cheapest_insertion(&inst, 1, &mut rng), vec![0, 1, 3, 2, 4]);
    }

    #[test]
    fn random_insertion_single_customer() {
        let inst = instance(&[(0.0, 0.0), (2.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(random_insertion(&inst, &mut rng), vec![0, 1, 2]);
    }

    #[test]
    fn exact_tsp_matches_enumeration() {
        for seed in 0..5 {
            let inst = random_instance(3 + seed as usize, seed);
            let tour = exact_tsp(&inst).unwrap();
            assert!(is_tour(&inst, &tour));
            assert!((tour_length(&inst, &tour) - brute_force_length(&inst)).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_tsp_square_perimeter() {
        let inst = instance(&[(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0), (1.0, 0.0)]);
        let tour = exact_tsp(&inst).unwrap();
        assert!((tour_length(&inst, &tour) - 8.0).abs() < 1e-12);
        assert_eq!(exact_tsp(&instance(&[(0.0, 0.0), (1.0, 1.0)])).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn exact_tsp_refuses_large() {
        let inst = random_instance(16, 1);
        assert_eq!(exact_tsp(&inst), Err(ConstructError::TooLarge { n: 16, max: 15 }));
    }

    #[test]
    fn improvement_never_lengthens() {
        let inst = random_instance(30, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let mut tour = k_nearest_neighbour(&inst, 3, &mut rng);
            let before = tour_length(&inst, &tour);
            improve_tour(&inst, &mut tour);
            assert!(is_tour(&inst, &tour));
            assert!(tour_length(&inst, &tour) <= before + 1e-9);
        }
        let small = random_instance(8, 4);
        let mut tour = k_nearest_neighbour(&small, 1, &mut rng);
        improve_tour(&small, &mut tour);
        assert!(tour_length(&small, &tour) <= 1.2 * brute_force_length(&small));
    }
}
