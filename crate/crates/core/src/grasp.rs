//! GRASP outer loop and the single-iteration GRASP+ variant.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::{best_known_tour, Constructor};
use crate::eval::{evaluate, Evaluation, Violations};
use crate::localsearch::improve;
use crate::model::{Instance, NodeId, Objective, Solution};
use crate::split::{split, SplitError};

#[derive(Debug, Error)]
pub enum GraspError {
    #[error("n_tsp must be at least 1")]
    NoIterations,
    #[error("k_choices must not be empty or contain 0")]
    BadK,
    #[error("could not build thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Infeasible(#[from] Violations),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspConfig {
    pub n_tsp: usize,
    pub constructor: Constructor,
    pub k_choices: Vec<usize>,
    pub objective: Objective,
    pub seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub parallel_workers: usize,
    pub local_search: bool,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            n_tsp: 2000,
            constructor: Constructor::KNearestNeighbour,
            k_choices: vec![2, 3],
            objective: Objective::MinCost,
            seed: 0,
            parallel_workers: 0,
            local_search: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraspStats {
    /// Objective reached by each iteration.
    pub iteration_values: Vec<f64>,
    /// Best value after each iteration.
    pub running_best: Vec<f64>,
    pub best_iteration: usize,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct GraspResult {
    pub solution: Solution,
    pub evaluation: Evaluation,
    pub value: f64,
    pub stats: GraspStats,
}

/// Giant tour → split → optional descent.
fn split_and_improve(instance: &Instance, tour: &[NodeId], objective: Objective, local_search: bool) -> Result<Solution, GraspError> {
    let sol = split(tour, instance, objective)?;
    if local_search {
        Ok(improve(instance, &sol, objective)?.0)
    } else {
        Ok(sol)
    }
}

fn iteration(instance: &Instance, config: &GraspConfig, it: usize) -> Result<(Solution, f64), GraspError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(it as u64);
    let k = *config.k_choices.choose(&mut rng).expect("checked non-empty");
    let tour = config.constructor.build(instance, k, &mut rng);
    let sol = split_and_improve(instance, &tour, config.objective, config.local_search)?;
    let value = evaluate(instance, &sol)?.value(config.objective);
    Ok((sol, value))
}

/// Runs `n_tsp` independent iterations and keeps the best. Every iteration
/// draws from its own RNG stream, so the result does not depend on the
/// number of workers.
pub fn run_grasp(instance: &Instance, config: &GraspConfig) -> Result<GraspResult, GraspError> {
    if config.n_tsp == 0 {
        return Err(GraspError::NoIterations);
    }
    if config.k_choices.is_empty() || config.k_choices.contains(&0) {
        return Err(GraspError::BadK);
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel_workers)
        .build()
        .map_err(|e| GraspError::Pool(e.to_string()))?;
    let results: Vec<Result<(Solution, f64), GraspError>> = pool.install(|| {
        (0..config.n_tsp)
            .into_par_iter()
            .map(|it| iteration(instance, config, it))
            .collect()
    });

    let mut values = Vec::with_capacity(config.n_tsp);
    let mut running = Vec::with_capacity(config.n_tsp);
    let mut best: Option<(Solution, f64, usize)> = None;
    for (it, r) in results.into_iter().enumerate() {
        let (sol, value) = r?;
        values.push(value);
        if best.as_ref().is_none_or(|(_, v, _)| value < *v) {
            best = Some((sol, value, it));
        }
        running.push(best.as_ref().unwrap().1);
    }
    let (solution, value, best_iteration) = best.expect("n_tsp >= 1");
    let evaluation = evaluate(instance, &solution)?;
    Ok(GraspResult {
        solution,
        evaluation,
        value,
        stats: GraspStats {
            iteration_values: values,
            running_best: running,
            best_iteration,
            wall_time: start.elapsed(),
        },
    })
}

/// One iteration on a good TSP tour: `tour` when given, else the optimal
/// tour for small instances or the best of 50 constructor runs.
pub fn run_grasp_plus(instance: &Instance, objective: Objective, tour: Option<&[NodeId]>) -> Result<(Solution, Evaluation), GraspError> {
    let tour = match tour {
        Some(t) => t.to_vec(),
        None => best_known_tour(instance, 0),
    };
    let sol = split_and_improve(instance, &tour, objective, true)?;
    let ev = evaluate(instance, &sol)?;
    Ok((sol, ev))
}
