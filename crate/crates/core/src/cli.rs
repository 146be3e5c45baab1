//! The `tspd` command line: `generate`, `solve`, `bench` and `report`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{error::ErrorKind, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::{best_known_tour, Constructor};
use crate::eval::{evaluate, Evaluation};
use crate::grasp::{run_grasp, run_grasp_plus, GraspConfig};
use crate::instance::{generate, load_instance, save_instance, solution_to_json, InstanceError, SolutionFile};
use crate::model::{enumerate_feasible_deliveries, CostParams, Instance, Objective, Solution};
use crate::oracle::{exact_tspd, ExactOptions};
use crate::split::split;
use crate::stats::{geometric_mean, mean, relative_std, rho, round2};
use crate::tspls::run_tspls;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Solver(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn solver_err(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "tspd", version, about = "Truck-and-drone routing solvers (TSP-D)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate benchmark instance classes and a manifest.
    Generate(GenerateArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Run the benchmark protocol over a directory of instances.
    Bench(BenchArgs),
    /// Re-aggregate saved benchmark runs into tables.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Grasp,
    GraspPlus,
    Tspls,
    Exact,
    Split,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Grasp => "grasp",
            Algo::GraspPlus => "grasp-plus",
            Algo::Tspls => "tspls",
            Algo::Exact => "exact",
            Algo::Split => "split",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Cost,
    Time,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Cost => Objective::MinCost,
            ObjectiveArg::Time => Objective::MinTime,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    None,
    CostRatio,
    DroneSpeed,
}

#[derive(clap::Args, Debug)]
pub struct GenerateArgs {
    /// Classes to generate (A-G).
    #[arg(long, value_delimiter = ',', default_value = "A,B,C,D,E,F,G")]
    pub classes: Vec<char>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Share of drone-eligible customers.
    #[arg(long, default_value_t = 0.8)]
    pub fraction: f64,
    /// Overrides the number of files per class.
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long, env = "TSPD_OUT_DIR", default_value = "tspd-out")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Grasp)]
    pub algo: Algo,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Cost)]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs; run r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// GRASP iterations per run.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// GRASP tour constructor: knn, kcheapest or random.
    #[arg(long)]
    pub constructor: Option<Constructor>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, env = "TSPD_OUT_DIR", default_value = "tspd-out")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Directory holding instance files (and optionally a manifest).
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Cost)]
    pub objective: ObjectiveArg,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Grasp, Algo::Tspls])]
    pub algos: Vec<Algo>,
    #[arg(long, value_enum, default_value_t = Sweep::None)]
    pub sweep: Sweep,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Only instances of these classes.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<char>,
    #[arg(long, env = "TSPD_OUT_DIR", default_value = "tspd-out")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// A `runs.jsonl` file written by `bench`.
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long, env = "TSPD_OUT_DIR", default_value = "tspd-out")]
    pub out: PathBuf,
}

/// (class, n, area, files) of the benchmark classes.
pub const CLASSES: [(char, usize, f64, usize); 7] = [
    ('A', 10, 100.0, 5),
    ('B', 50, 100.0, 10),
    ('C', 50, 500.0, 10),
    ('D', 50, 1000.0, 10),
    ('E', 100, 100.0, 10),
    ('F', 100, 500.0, 10),
    ('G', 100, 1000.0, 10),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub class: String,
    pub file: String,
    pub n: usize,
    pub area: f64,
    pub seed: u64,
    /// Customers per square km.
    pub density: f64,
    pub feasible_deliveries: usize,
    /// Mean truck distance over all node pairs.
    pub avg_distance: f64,
}

fn average_distance(instance: &Instance) -> f64 {
    let m = instance.matrices();
    let last = instance.n();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..=last {
        for j in i + 1..=last {
            sum += m.truck_dist(i, j);
            count += 1;
        }
    }
    sum / count as f64
}

fn instance_seed(base: u64, class_index: usize, idx: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(class_index as u64 * 1000 + idx as u64)
}

/// Instance `idx` (1-based) of a benchmark class, exactly as `generate`
/// writes it for the same base seed and fraction.
pub fn benchmark_instance(class: char, idx: usize, base_seed: u64, fraction: f64) -> Result<Instance, CliError> {
    let ci = CLASSES
        .iter()
        .position(|c| c.0.eq_ignore_ascii_case(&class))
        .ok_or_else(|| usage("unknown instance class"))?;
    let (class, n, area, _) = CLASSES[ci];
    Ok(generate(
        format!("{class}{idx}"),
        n,
        area,
        fraction,
        instance_seed(base_seed, ci, idx),
        CostParams::default(),
    )?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Vec<ManifestEntry>, CliError> {
    if !(0.0..=1.0).contains(&args.fraction) {
        return Err(Cli::command()
            .error(ErrorKind::ValueValidation, "--fraction must lie in [0, 1]")
            .into());
    }
    create_dir(&args.out)?;
    let mut entries = Vec::new();
    for (ci, &(class, n, area, files)) in CLASSES.iter().enumerate() {
        if !args.classes.iter().any(|c| c.eq_ignore_ascii_case(&class)) {
            continue;
        }
        for idx in 1..=args.per_class.unwrap_or(files) {
            let id = format!("{class}{idx}");
            let seed = instance_seed(args.seed, ci, idx);
            let inst = generate(id.clone(), n, area, args.fraction, seed, CostParams::default())?;
            let file = format!("{id}.json");
            save_instance(&inst, &args.out.join(&file))?;
            entries.push(ManifestEntry {
                id,
                class: class.to_string(),
                file,
                n,
                area,
                seed,
                density: n as f64 / area,
                feasible_deliveries: enumerate_feasible_deliveries(&inst).len(),
                avg_distance: average_distance(&inst),
            });
        }
    }
    write_file(&args.out.join("manifest.json"), &(serde_json::to_string_pretty(&entries)? + "\n"))?;
    let path = args.out.join("manifest.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for e in &entries {
        w.serialize(e)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(entries)
}

/// Summary of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub class: String,
    pub algo: Algo,
    pub objective: Objective,
    pub setting: String,
    pub run: usize,
    pub seed: u64,
    pub value: f64,
    pub reference: f64,
    pub rho: f64,
    pub wall_time_s: f64,
    pub truck_wait: f64,
    pub drone_wait: f64,
    pub completion: f64,
    pub drones: usize,
}

struct Outcome {
    solution: Solution,
    evaluation: Evaluation,
    seconds: f64,
}

fn solve_once(
    instance: &Instance,
    algo: Algo,
    objective: Objective,
    seed: u64,
    iterations: usize,
    constructor: Constructor,
    workers: usize,
) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (solution, evaluation) = match algo {
        Algo::Grasp => {
            let config = GraspConfig {
                n_tsp: iterations,
                constructor,
                objective,
                seed,
                parallel_workers: workers,
                ..Default::default()
            };
            let r = run_grasp(instance, &config).map_err(solver_err)?;
            (r.solution, r.evaluation)
        }
        Algo::GraspPlus => run_grasp_plus(instance, objective, None).map_err(solver_err)?,
        Algo::Tspls => {
            let r = run_tspls(instance, objective, None).map_err(solver_err)?;
            (r.solution, r.evaluation)
        }
        Algo::Exact => {
            let options = ExactOptions {
                parallel: workers != 1,
                ..Default::default()
            };
            let (sol, _) = exact_tspd(instance, objective, &options).map_err(solver_err)?;
            let ev = evaluate(instance, &sol).map_err(solver_err)?;
            (sol, ev)
        }
        Algo::Split => {
            let tour = best_known_tour(instance, seed);
            let sol = split(&tour, instance, objective).map_err(solver_err)?;
            let ev = evaluate(instance, &sol).map_err(solver_err)?;
            (sol, ev)
        }
    };
    Ok(Outcome {
        solution,
        evaluation,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Objective of the best-known pure truck tour.
pub fn tsp_reference(instance: &Instance, objective: Objective) -> f64 {
    let tour = best_known_tour(instance, 0);
    evaluate(instance, &Solution::truck_only(tour))
        .expect("a giant tour is feasible")
        .value(objective)
}

fn usage(msg: &str) -> CliError {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).into()
}

#[allow(clippy::too_many_arguments)]
fn record(
    instance: &Instance,
    class: &str,
    algo: Algo,
    objective: Objective,
    setting: &str,
    run: usize,
    seed: u64,
    reference: f64,
    o: &Outcome,
) -> RunRecord {
    let value = o.evaluation.value(objective);
    RunRecord {
        instance_id: instance.id().to_string(),
        class: class.to_string(),
        algo,
        objective,
        setting: setting.to_string(),
        run,
        seed,
        value,
        reference,
        rho: rho(value, reference),
        wall_time_s: o.seconds,
        truck_wait: o.evaluation.truck_waiting_time,
        drone_wait: o.evaluation.drone_waiting_time,
        completion: o.evaluation.completion_time,
        drones: o.solution.deliveries.len(),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Vec<RunRecord>, CliError> {
    if args.algo != Algo::Grasp && (args.iterations.is_some() || args.constructor.is_some()) {
        return Err(usage("--iterations and --constructor only apply to --algo grasp"));
    }
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if args.runs > 1 && args.algo != Algo::Grasp {
        return Err(usage(
            "--runs > 1 only applies to --algo grasp; the other algorithms are deterministic",
        ));
    }
    let instance = load_instance(&args.instance)?;
    let objective: Objective = args.objective.into();
    create_dir(&args.out)?;
    let reference = tsp_reference(&instance, objective);
    let mut records = Vec::new();
    for run in 0..args.runs {
        let seed = args.seed + run as u64;
        let o = solve_once(
            &instance,
            args.algo,
            objective,
            seed,
            args.iterations.unwrap_or(2000),
            args.constructor.unwrap_or(Constructor::KNearestNeighbour),
            args.workers,
        )?;
        let file = SolutionFile::new(&instance, objective, &o.solution, &o.evaluation);
        let name = format!("{}_{}_{}_run{run}.json", instance.id(), args.algo.name(), objective);
        write_file(&args.out.join(name), &solution_to_json(&file))?;
        records.push(record(&instance, "", args.algo, objective, "default", run, seed, reference, &o));
    }
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let line = format!(
        "{} {} {}: gamma_avg {:.3} gamma_best {:.3} T_avg {:.3}s w_avg {:.3} w'_avg {:.3} t_avg {:.3} sigma {:.2} rho_avg {:.2}",
        instance.id(),
        args.algo.name(),
        objective,
        mean(&values),
        values.iter().cloned().fold(f64::INFINITY, f64::min),
        mean(&records.iter().map(|r| r.wall_time_s).collect::<Vec<_>>()),
        mean(&records.iter().map(|r| r.truck_wait).collect::<Vec<_>>()),
        mean(&records.iter().map(|r| r.drone_wait).collect::<Vec<_>>()),
        mean(&records.iter().map(|r| r.completion).collect::<Vec<_>>()),
        relative_std(&values),
        mean(&records.iter().map(|r| r.rho).collect::<Vec<_>>()),
    );
    println!("{line}");
    Ok(records)
}

fn class_of(id: &str) -> String {
    id.chars().take_while(|c| c.is_ascii_alphabetic()).collect()
}

fn load_bench_instances(dir: &Path, classes: &[char]) -> Result<Vec<(String, Instance)>, CliError> {
    let manifest = dir.join("manifest.json");
    let mut files: Vec<(String, PathBuf)> = if manifest.exists() {
        let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
        entries.into_iter().map(|e| (e.class, dir.join(e.file))).collect()
    } else {
        let mut v = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let stem = path.file_stem().unwrap().to_string_lossy().to_string();
                v.push((class_of(&stem), path));
            }
        }
        v.sort_by(|a, b| a.1.cmp(&b.1));
        v
    };
    if !classes.is_empty() {
        files.retain(|(c, _)| classes.iter().any(|k| c.eq_ignore_ascii_case(&k.to_string())));
    }
    files.into_iter().map(|(c, p)| Ok((c, load_instance(&p)?))).collect()
}

/// Parameter settings of a sweep, as (label, params).
pub fn sweep_settings(sweep: Sweep, base: &CostParams) -> Vec<(String, CostParams)> {
    match sweep {
        Sweep::None => vec![("default".into(), *base)],
        Sweep::CostRatio => [10.0, 25.0, 50.0]
            .iter()
            .map(|&k| {
                (
                    format!("1:{k}"),
                    CostParams {
                        drone_cost: base.truck_cost / k,
                        ..*base
                    },
                )
            })
            .collect(),
        Sweep::DroneSpeed => [25.0, 40.0, 55.0]
            .iter()
            .map(|&s| (format!("{s}km/h"), CostParams { drone_speed: s, ..*base }))
            .collect(),
    }
}

/// Per-instance aggregate over runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance_id: String,
    pub class: String,
    pub algo: Algo,
    pub setting: String,
    pub runs: usize,
    pub gamma_avg: f64,
    pub gamma_best: f64,
    pub rho_avg: f64,
    pub t_avg_s: f64,
    pub sigma: f64,
    pub w_avg: f64,
    pub wp_avg: f64,
    pub completion_avg: f64,
    pub drones_avg: f64,
}

/// Class-level geometric means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub class: String,
    pub algo: Algo,
    pub setting: String,
    pub instances: usize,
    pub rho_avg: f64,
    pub t_avg_s: f64,
    pub sigma_avg: f64,
    pub w_avg: f64,
    pub wp_avg: f64,
    pub drones_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub instances: Vec<InstanceRow>,
    pub summary: Vec<SummaryRow>,
}

fn group_keys<T, K: PartialEq + Clone>(items: &[T], key: impl Fn(&T) -> K) -> Vec<K> {
    let mut keys: Vec<K> = Vec::new();
    for it in items {
        let k = key(it);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

/// Aggregates run records. The result depends only on the records and
/// their order.
pub fn aggregate(records: &[RunRecord]) -> Tables {
    let keys = group_keys(records, |r| (r.instance_id.clone(), r.class.clone(), r.algo, r.setting.clone()));
    let instances: Vec<InstanceRow> = keys
        .into_iter()
        .map(|(id, class, algo, setting)| {
            let rs: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.instance_id == id && r.algo == algo && r.setting == setting)
                .collect();
            let col = |f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let values = col(|r| r.value);
            InstanceRow {
                instance_id: id,
                class,
                algo,
                setting,
                runs: rs.len(),
                gamma_avg: mean(&values),
                gamma_best: values.iter().cloned().fold(f64::INFINITY, f64::min),
                rho_avg: mean(&col(|r| r.rho)),
                t_avg_s: mean(&col(|r| r.wall_time_s)),
                sigma: relative_std(&values),
                w_avg: mean(&col(|r| r.truck_wait)),
                wp_avg: mean(&col(|r| r.drone_wait)),
                completion_avg: mean(&col(|r| r.completion)),
                drones_avg: mean(&col(|r| r.drones as f64)),
            }
        })
        .collect();
    let keys = group_keys(&instances, |r| (r.class.clone(), r.algo, r.setting.clone()));
    let summary = keys
        .into_iter()
        .map(|(class, algo, setting)| {
            let rows: Vec<&InstanceRow> = instances
                .iter()
                .filter(|r| r.class == class && r.algo == algo && r.setting == setting)
                .collect();
            let col = |f: fn(&InstanceRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            SummaryRow {
                class,
                algo,
                setting,
                instances: rows.len(),
                rho_avg: geometric_mean(&col(|r| r.rho_avg)),
                t_avg_s: geometric_mean(&col(|r| r.t_avg_s.max(1e-6))),
                sigma_avg: mean(&col(|r| r.sigma)),
                w_avg: mean(&col(|r| r.w_avg)),
                wp_avg: mean(&col(|r| r.wp_avg)),
                drones_avg: mean(&col(|r| r.drones_avg)),
            }
        })
        .collect();
    Tables { instances, summary }
}

/// Writes tables as CSV (ratios rounded to two decimals) and JSON.
pub fn write_tables(out: &Path, tables: &Tables) -> Result<(), CliError> {
    create_dir(out)?;
    let path = out.join("bench_instances.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &tables.instances {
        w.serialize(InstanceRow {
            rho_avg: round2(r.rho_avg),
            sigma: round2(r.sigma),
            ..r.clone()
        })?;
    }
    w.flush().map_err(io_err(&path))?;
    let path = out.join("bench_summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &tables.summary {
        w.serialize(SummaryRow {
            rho_avg: round2(r.rho_avg),
            sigma_avg: round2(r.sigma_avg),
            ..r.clone()
        })?;
    }
    w.flush().map_err(io_err(&path))?;
    write_file(&out.join("bench.json"), &(serde_json::to_string_pretty(tables)? + "\n"))
}

fn print_summary(tables: &Tables) {
    println!("class algo setting instances rho_avg T_avg(s) sigma w_avg w'_avg drones");
    for r in &tables.summary {
        println!(
            "{} {} {} {} {:.2} {:.3} {:.2} {:.3} {:.3} {:.2}",
            r.class,
            r.algo.name(),
            r.setting,
            r.instances,
            r.rho_avg,
            r.t_avg_s,
            r.sigma_avg,
            r.w_avg,
            r.wp_avg,
            r.drones_avg
        );
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Tables, CliError> {
    let objective: Objective = args.objective.into();
    match (objective, args.sweep) {
        (Objective::MinCost, Sweep::DroneSpeed) => return Err(usage("--sweep drone-speed applies to --objective time")),
        (Objective::MinTime, Sweep::CostRatio) => return Err(usage("--sweep cost-ratio applies to --objective cost")),
        _ => {}
    }
    if args.runs == 0 || args.iterations == 0 {
        return Err(usage("--runs and --iterations must be at least 1"));
    }
    if args.algos.iter().any(|a| !matches!(a, Algo::Grasp | Algo::Tspls | Algo::GraspPlus)) {
        return Err(usage("bench runs grasp, grasp-plus and tspls only"));
    }
    let instances = load_bench_instances(&args.instances, &args.classes)?;
    let mut records = Vec::new();
    for (class, base) in &instances {
        for (label, params) in sweep_settings(args.sweep, base.params()) {
            let inst = base.with_params(params).map_err(solver_err)?;
            let reference = tsp_reference(&inst, objective);
            for &algo in &args.algos {
                let runs = if algo == Algo::Grasp { args.runs } else { 1 };
                for run in 0..runs {
                    let seed = args.seed + run as u64;
                    let o = solve_once(
                        &inst,
                        algo,
                        objective,
                        seed,
                        args.iterations,
                        Constructor::KNearestNeighbour,
                        args.workers,
                    )?;
                    records.push(record(&inst, class, algo, objective, &label, run, seed, reference, &o));
                }
            }
        }
    }
    create_dir(&args.out)?;
    let mut lines = String::new();
    for r in &records {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    write_file(&args.out.join("runs.jsonl"), &lines)?;
    let tables = aggregate(&records);
    write_tables(&args.out, &tables)?;
    print_summary(&tables);
    Ok(tables)
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub fn cmd_report(args: &ReportArgs) -> Result<Tables, CliError> {
    let tables = aggregate(&read_runs(&args.runs)?);
    write_tables(&args.out, &tables)?;
    print_summary(&tables);
    Ok(tables)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => {
            let entries = cmd_generate(a)?;
            println!("wrote {} instances to {}", entries.len(), a.out.display());
        }
        Command::Solve(a) => {
            cmd_solve(a)?;
        }
        Command::Bench(a) => {
            cmd_bench(a)?;
        }
        Command::Report(a) => {
            cmd_report(a)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
