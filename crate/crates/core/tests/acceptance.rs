//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! straight to stdout so the lines survive output capture.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tspd::cli::{benchmark_instance, sweep_settings, tsp_reference, Sweep};
use tspd::eval::{evaluate, validate};
use tspd::grasp::{run_grasp, GraspConfig};
use tspd::instance::generate;
use tspd::milp::{check_constraints, MilpModel, MilpOptions};
use tspd::model::enumerate_feasible_deliveries;
use tspd::oracle::{exact_split, exact_tspd, ExactOptions};
use tspd::split::split;
use tspd::stats::{geometric_mean, mean, rho};
use tspd::tspls::run_tspls;
use tspd::{CostParams, DroneDelivery, Instance, NodeId, Objective, Solution};

const SPLIT_PAIRS: usize = 500;
const SPLIT_REL_TOL: f64 = 1e-9;
const ORACLE_INSTANCES: u64 = 20;
const ORACLE_HIT_RATE: f64 = 0.9;
const BENCH_ITERATIONS: usize = 2000;
const ORDERING_RATE: f64 = 0.9;
const GRASP_BUDGET_N100: Duration = Duration::from_secs(240);
const RHO_BAND: (f64, f64) = (60.0, 90.0);
const SWEEP_ITERATIONS: usize = 200;
const BRIDGE_SOLUTIONS: usize = 500;
const BRIDGE_OBJ_TOL: f64 = 1e-6;
const GOLDEN_TOL: f64 = 0.01;
const SPLIT_N100_LIMIT: Duration = Duration::from_secs(1);
const SPLIT_GROWTH_LIMIT: f64 = 20.0;

fn report(id: u32, pass: bool, detail: &str) -> bool {
    let mut out = std::io::stdout().lock();
    writeln!(out, "AC{id} {} {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
    out.flush().unwrap();
    pass
}

fn random_tour(n: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let mut perm: Vec<NodeId> = (1..=n).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut tour = vec![0];
    tour.extend(perm);
    tour.push(n + 1);
    tour
}

fn small_instance(n: usize, seed: u64) -> Instance {
    generate(format!("s{seed}"), n, 100.0, 0.8, seed, CostParams::default()).unwrap()
}

fn split_optimality() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for pair in 0..SPLIT_PAIRS {
        let n = rng.gen_range(1..=8);
        let inst = small_instance(n, 10_000 + pair as u64);
        let tour = random_tour(n, &mut rng);
        let objective = if pair % 2 == 0 { Objective::MinCost } else { Objective::MinTime };
        let sol = split(&tour, &inst, objective).unwrap();
        let got = evaluate(&inst, &sol).unwrap().value(objective);
        let (_, best) = exact_split(&tour, &inst, objective).unwrap();
        worst = worst.max((got - best).abs() / best.abs().max(1.0));
    }
    report(
        1,
        worst <= SPLIT_REL_TOL,
        &format!(
            "split vs exhaustive split on {SPLIT_PAIRS} pairs: max rel gap {worst:.2e} in {:.1?}",
            start.elapsed()
        ),
    )
}

fn grasp_optimality() -> bool {
    let start = Instant::now();
    let mut hits = 0;
    for seed in 0..ORACLE_INSTANCES {
        let inst = small_instance(5 + (seed % 3) as usize, 20_000 + seed);
        let config = GraspConfig {
            n_tsp: BENCH_ITERATIONS,
            seed,
            ..Default::default()
        };
        let got = run_grasp(&inst, &config).unwrap().value;
        let (_, opt) = exact_tspd(&inst, Objective::MinCost, &ExactOptions::default()).unwrap();
        assert!(got >= opt * (1.0 - 1e-9), "GRASP below the exact optimum");
        if got <= opt * (1.0 + 1e-9) {
            hits += 1;
        }
    }
    let rate = hits as f64 / ORACLE_INSTANCES as f64;
    report(
        2,
        rate >= ORACLE_HIT_RATE,
        &format!(
            "GRASP hits the exact optimum on {hits}/{ORACLE_INSTANCES} instances (n 5-7) in {:.1?}",
            start.elapsed()
        ),
    )
}

struct BenchRun {
    grasp: f64,
    tspls: f64,
    reference: f64,
    truck_wait: f64,
    drone_wait: f64,
}

fn fifty_customer_instances() -> Vec<Instance> {
    ['B', 'C', 'D']
        .iter()
        .flat_map(|&c| (1..=10).map(move |i| benchmark_instance(c, i, 1, 0.8).unwrap()))
        .collect()
}

fn bench_runs(instances: &[Instance]) -> Vec<BenchRun> {
    instances
        .iter()
        .map(|inst| {
            let g = run_grasp(
                inst,
                &GraspConfig {
                    n_tsp: BENCH_ITERATIONS,
                    ..Default::default()
                },
            )
            .unwrap();
            let l = run_tspls(inst, Objective::MinCost, None).unwrap();
            BenchRun {
                grasp: g.value,
                tspls: l.evaluation.total_cost,
                reference: tsp_reference(inst, Objective::MinCost),
                truck_wait: g.evaluation.truck_waiting_time,
                drone_wait: g.evaluation.drone_waiting_time,
            }
        })
        .collect()
}

fn heuristic_ordering(runs: &[BenchRun]) -> bool {
    let ok = runs.iter().filter(|r| r.grasp <= r.tspls * (1.0 + 1e-9)).count();
    let inst = benchmark_instance('F', 1, 1, 0.8).unwrap();
    let start = Instant::now();
    run_grasp(
        &inst,
        &GraspConfig {
            n_tsp: BENCH_ITERATIONS,
            ..Default::default()
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    let rate = ok as f64 / runs.len() as f64;
    report(
        3,
        rate >= ORDERING_RATE && elapsed <= GRASP_BUDGET_N100,
        &format!(
            "GRASP <= TSP-LS on {ok}/{} classes B-D; GRASP on F1 (n = 100) took {elapsed:.1?}",
            runs.len()
        ),
    )
}

fn savings_band(runs: &[BenchRun]) -> bool {
    let g = geometric_mean(&runs.iter().map(|r| rho(r.grasp, r.reference)).collect::<Vec<_>>());
    report(
        4,
        (RHO_BAND.0..=RHO_BAND.1).contains(&g),
        &format!("GRASP min-cost rho geometric mean {g:.2} over classes B-D (band {:?})", RHO_BAND),
    )
}

fn cost_ratio_monotonicity(instances: &[Instance]) -> bool {
    let mut means = Vec::new();
    for (i, (label, _)) in sweep_settings(Sweep::CostRatio, &CostParams::default()).iter().enumerate() {
        let rhos: Vec<f64> = instances
            .iter()
            .map(|base| {
                let params = sweep_settings(Sweep::CostRatio, base.params())[i].1;
                let inst = base.with_params(params).unwrap();
                let v = run_grasp(
                    &inst,
                    &GraspConfig {
                        n_tsp: SWEEP_ITERATIONS,
                        ..Default::default()
                    },
                )
                .unwrap()
                .value;
                rho(v, tsp_reference(&inst, Objective::MinCost))
            })
            .collect();
        means.push((label.clone(), geometric_mean(&rhos)));
    }
    let (a, b, c) = (means[0].1, means[1].1, means[2].1);
    report(
        5,
        a > b && b > c && (b - c) < (a - b),
        &format!("rho by drone:truck cost ratio {means:.2?}"),
    )
}

fn waiting_asymmetry(instances: &[Instance], runs: &[BenchRun]) -> bool {
    let cost_truck = mean(&runs.iter().map(|r| r.truck_wait).collect::<Vec<_>>());
    let cost_drone = mean(&runs.iter().map(|r| r.drone_wait).collect::<Vec<_>>());
    let (mut time_truck, mut time_drone) = (Vec::new(), Vec::new());
    for inst in instances {
        let ev = run_grasp(
            inst,
            &GraspConfig {
                n_tsp: SWEEP_ITERATIONS,
                objective: Objective::MinTime,
                ..Default::default()
            },
        )
        .unwrap()
        .evaluation;
        time_truck.push(ev.truck_waiting_time);
        time_drone.push(ev.drone_waiting_time);
    }
    let (time_truck, time_drone) = (mean(&time_truck), mean(&time_drone));
    report(
        6,
        cost_truck > cost_drone && time_drone > time_truck,
        &format!("mean waiting (min) truck/drone: min-cost {cost_truck:.3}/{cost_drone:.3}, min-time {time_truck:.3}/{time_drone:.3}"),
    )
}

/// A random solution; roughly half are split results (valid), the rest are
/// corrupted in one of several ways.
fn random_solution(inst: &Instance, rng: &mut ChaCha8Rng) -> Solution {
    let n = inst.n();
    let tour = random_tour(n, rng);
    let objective = if rng.gen_bool(0.5) {
        Objective::MinCost
    } else {
        Objective::MinTime
    };
    let sol = split(&tour, inst, objective).unwrap();
    if rng.gen_bool(0.5) {
        return sol;
    }
    let (mut truck, mut deliveries) = (sol.truck_tour.clone(), sol.deliveries.clone());
    match rng.gen_range(0..6) {
        0 if truck.len() > 2 => {
            truck.remove(rng.gen_range(1..truck.len() - 1));
        }
        1 => {
            let feasible = enumerate_feasible_deliveries(inst);
            if !feasible.is_empty() {
                deliveries.push(feasible[rng.gen_range(0..feasible.len())]);
            }
        }
        2 => {
            let (a, b) = (rng.gen_range(0..=n + 1), rng.gen_range(0..=n + 1));
            deliveries.push(DroneDelivery::new(a, rng.gen_range(1..=n), b));
        }
        3 if truck.len() > 3 => {
            let i = rng.gen_range(1..truck.len() - 1);
            truck.insert(i, truck[i]);
        }
        4 if !deliveries.is_empty() => {
            let d = deliveries[0];
            deliveries[0] = DroneDelivery::new(d.rendezvous.min(n), d.customer, d.launch.max(1));
        }
        _ => {
            truck.swap(0, 1);
        }
    }
    Solution::new(truck, deliveries)
}

fn milp_bridge() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut agree, mut valid, mut literal_disagree) = (0, 0, 0);
    let mut worst_gap = 0.0f64;
    for round in 0..BRIDGE_SOLUTIONS {
        let n = rng.gen_range(1..=8);
        let inst = small_instance(n, 30_000 + round as u64);
        let sol = random_solution(&inst, &mut rng);
        let is_valid = validate(&inst, &sol).is_ok();
        let milp_ok = check_constraints(&inst, &sol, MilpOptions::default()).is_empty();
        if is_valid == milp_ok {
            agree += 1;
        }
        let literal = MilpOptions {
            literal_endurance: true,
            ..Default::default()
        };
        if is_valid != check_constraints(&inst, &sol, literal).is_empty() {
            literal_disagree += 1;
        }
        if is_valid {
            valid += 1;
            let model = MilpModel::build(&inst, MilpOptions::default());
            let obj = model.objective_value(&model.assign(&inst, &sol));
            let ev = evaluate(&inst, &sol).unwrap().total_cost;
            worst_gap = worst_gap.max((obj - ev).abs() / ev.max(1.0));
        }
    }
    report(
        7,
        agree == BRIDGE_SOLUTIONS && worst_gap <= BRIDGE_OBJ_TOL,
        &format!(
            "validate/check_constraints agree on {agree}/{BRIDGE_SOLUTIONS} ({valid} valid), max objective gap {worst_gap:.2e}; literal endurance row disagrees on {literal_disagree}"
        ),
    )
}

fn ratio_goldens() -> bool {
    let a = rho(1007.33, 658.322);
    let b = rho(810.244, 658.322);
    report(
        8,
        (a - 153.01).abs() <= GOLDEN_TOL && (b - 123.07).abs() <= GOLDEN_TOL,
        &format!("rho(1007.33, 658.322) = {a:.4}, rho(810.244, 658.322) = {b:.4}"),
    )
}

fn determinism() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_tspd");
    let run = |args: &[&str]| {
        let status = Command::new(bin).args(args).env_remove("TSPD_OUT_DIR").output().unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    let root = dir.path();
    let inst_dir = root.join("inst");
    run(&[
        "generate",
        "--classes",
        "A,B",
        "--per-class",
        "2",
        "--out",
        inst_dir.to_str().unwrap(),
    ]);
    let mut identical = true;
    let mut files = 0;
    for id in ["A1", "B1"] {
        let inst = inst_dir.join(format!("{id}.json"));
        for (algo, extra) in [
            ("grasp", vec!["--iterations", "60", "--runs", "2"]),
            ("split", vec![]),
            ("tspls", vec![]),
        ] {
            let mut outputs = Vec::new();
            for workers in ["1", "4"] {
                let out = root.join(format!("out_{workers}"));
                let mut args = vec![
                    "solve",
                    "--instance",
                    inst.to_str().unwrap(),
                    "--algo",
                    algo,
                    "--seed",
                    "3",
                    "--workers",
                    workers,
                    "--out",
                    out.to_str().unwrap(),
                ];
                args.extend(extra.iter().copied());
                run(&args);
                outputs.push(out);
            }
            let mut names: Vec<_> = std::fs::read_dir(&outputs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            for name in names {
                let a = std::fs::read(outputs[0].join(&name)).unwrap();
                let b = std::fs::read(outputs[1].join(&name)).unwrap();
                identical &= a == b;
                files += 1;
            }
        }
    }
    report(
        9,
        identical && files > 0,
        &format!("{files} solution file comparisons across 1 and 4 workers, identical = {identical}"),
    )
}

fn median_split_time(inst: &Instance, tour: &[NodeId]) -> Duration {
    let mut times: Vec<Duration> = (0..5)
        .map(|_| {
            let t = Instant::now();
            split(tour, inst, Objective::MinCost).unwrap();
            t.elapsed()
        })
        .collect();
    times.sort();
    times[2]
}

fn complexity_envelope() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let i50 = generate("c50", 50, 500.0, 0.8, 1, CostParams::default()).unwrap();
    let i100 = generate("c100", 100, 500.0, 0.8, 1, CostParams::default()).unwrap();
    let t50 = median_split_time(&i50, &random_tour(50, &mut rng));
    let t100 = median_split_time(&i100, &random_tour(100, &mut rng));
    let growth = t100.as_secs_f64() / t50.as_secs_f64().max(1e-9);
    report(
        10,
        t100 < SPLIT_N100_LIMIT && growth <= SPLIT_GROWTH_LIMIT,
        &format!("split n = 50 {t50:.2?}, n = 100 {t100:.2?}, growth {growth:.1}x"),
    )
}

#[test]
fn acceptance_criteria() {
    writeln!(std::io::stdout()).unwrap();
    let mut results = vec![split_optimality(), grasp_optimality()];
    let instances = fifty_customer_instances();
    let runs = bench_runs(&instances);
    results.push(heuristic_ordering(&runs));
    results.push(savings_band(&runs));
    results.push(cost_ratio_monotonicity(&instances));
    results.push(waiting_asymmetry(&instances, &runs));
    results.push(milp_bridge());
    results.push(ratio_goldens());
    results.push(determinism());
    results.push(complexity_envelope());
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
