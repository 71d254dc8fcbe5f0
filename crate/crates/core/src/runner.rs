//! Sweep execution and result files.
//!
//! Every (algorithm, cell, repetition) run draws from its own RNG streams,
//! derived from the root seed, the cell parameter and the repetition, so
//! results do not depend on execution order or thread count.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{viterbi_place, Algorithm, SolverParams};
use crate::config::{ExperimentConfig, Mode};
use crate::engine::{mix, run_dynamic_simulation, run_static_experiment, Setup};
use crate::error::{Error, Result};
use crate::oracle::{brute_force_optimal, tiny_instance, verify_constraints, HostScope};
use crate::pathing::candidate_paths;
use crate::requests::UserRequest;
use crate::state::{strategy_bandwidth, PlacementStrategy};

/// One CSV row: one static run, or one slot of a dynamic run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub mode: String,
    pub algorithm: String,
    pub cell_param: f64,
    pub repetition: u32,
    /// -1 for static runs.
    pub slot: i64,
    pub seed: u64,
    #[serde(rename = "C_bw_mbps")]
    pub c_bw_mbps: f64,
    #[serde(rename = "C_user_ms")]
    pub c_user_ms: f64,
    pub allocated_fraction: f64,
    pub edge_count: usize,
    pub cloud_count: usize,
    pub local_count: usize,
    pub rounds: usize,
    pub solver_calls: usize,
    pub wall_ms: f64,
}

/// Mean and sample standard deviation per (algorithm, cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub mode: String,
    pub algorithm: String,
    pub cell_param: f64,
    pub samples: usize,
    #[serde(rename = "C_bw_mbps_mean")]
    pub c_bw_mean: f64,
    #[serde(rename = "C_bw_mbps_std")]
    pub c_bw_std: f64,
    #[serde(rename = "C_user_ms_mean")]
    pub c_user_mean: f64,
    #[serde(rename = "C_user_ms_std")]
    pub c_user_std: f64,
    pub allocated_fraction_mean: f64,
    pub allocated_fraction_std: f64,
    pub edge_count_mean: f64,
    pub cloud_count_mean: f64,
    pub local_count_mean: f64,
    pub rounds_mean: f64,
    pub solver_calls_mean: f64,
}

/// Aggregate plus figures that are not part of the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub aggregate: AggregateRow,
    /// Dynamic runs: mean per-slot bandwidth added by new placements, Mbps.
    pub bandwidth_added_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub mode: String,
    pub seed: u64,
    pub repetitions: u32,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub detail: Vec<DetailRow>,
    pub aggregate: Vec<AggregateRow>,
    pub summary: Summary,
}

/// Seed of one (cell, repetition) run. Shared by all algorithms so they
/// place identical workloads.
pub fn run_seed(root: u64, cell: f64, repetition: u32) -> u64 {
    mix(mix(root, cell.to_bits()), repetition as u64)
}

pub fn setup_for(config: &ExperimentConfig) -> Result<Setup> {
    Ok(Setup {
        scenario: config.scenario()?,
        workload: config.workload.clone(),
        solver: config.solver.clone(),
        timing: config.experiment.timing,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::invalid("jobs", e.to_string()))
}

struct Task {
    algorithm: Algorithm,
    cell: f64,
    repetition: u32,
}

fn tasks(config: &ExperimentConfig) -> Vec<Task> {
    let mut out = Vec::new();
    for &algorithm in &config.experiment.algorithms {
        for cell in config.cells() {
            for repetition in 0..config.experiment.repetitions {
                out.push(Task { algorithm, cell, repetition });
            }
        }
    }
    out
}

fn run_task(config: &ExperimentConfig, setup: &Setup, task: &Task) -> Result<(Vec<DetailRow>, Vec<f64>)> {
    let seed = run_seed(config.experiment.seed, task.cell, task.repetition);
    let mode = config.experiment.mode;
    let row = |slot: i64| DetailRow {
        mode: mode.name().to_string(),
        algorithm: task.algorithm.name().to_string(),
        cell_param: task.cell,
        repetition: task.repetition,
        slot,
        seed,
        c_bw_mbps: 0.0,
        c_user_ms: 0.0,
        allocated_fraction: 0.0,
        edge_count: 0,
        cloud_count: 0,
        local_count: 0,
        rounds: 0,
        solver_calls: 0,
        wall_ms: 0.0,
    };
    match mode {
        Mode::Static => {
            let run = run_static_experiment(setup, task.algorithm, task.cell as usize, seed);
            let r = &run.report;
            Ok((
                vec![DetailRow {
                    c_bw_mbps: r.bandwidth_cost,
                    c_user_ms: r.user_delay_cost,
                    allocated_fraction: r.allocated_fraction,
                    edge_count: r.edge_count,
                    cloud_count: r.cloud_count,
                    local_count: r.local_count,
                    rounds: r.rounds,
                    solver_calls: r.solver_calls,
                    wall_ms: run.wall_ms,
                    ..row(-1)
                }],
                Vec::new(),
            ))
        }
        Mode::Dynamic => {
            let run = run_dynamic_simulation(setup, task.algorithm, task.cell, config.experiment.slots, seed, |_| {})?;
            let added = run.slots.iter().map(|m| m.bandwidth_added).collect();
            let rows = run
                .slots
                .iter()
                .map(|m| DetailRow {
                    c_bw_mbps: m.bandwidth_cost,
                    c_user_ms: m.user_delay_cost,
                    allocated_fraction: m.allocated_fraction,
                    edge_count: m.edge_count,
                    cloud_count: m.cloud_count,
                    local_count: m.local_count,
                    rounds: m.rounds,
                    solver_calls: m.solver_calls,
                    wall_ms: m.wall_ms,
                    ..row(m.slot as i64)
                })
                .collect();
            Ok((rows, added))
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; zero below two samples.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Groups detail rows by (algorithm, cell) in first-seen order.
pub fn aggregate(detail: &[DetailRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, String, u64)> = Vec::new();
    for r in detail {
        let key = (r.mode.clone(), r.algorithm.clone(), r.cell_param.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(mode, algorithm, bits)| {
            let rows: Vec<&DetailRow> = detail
                .iter()
                .filter(|r| r.mode == mode && r.algorithm == algorithm && r.cell_param.to_bits() == bits)
                .collect();
            let col = |f: fn(&DetailRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let bw = col(|r| r.c_bw_mbps);
            let user = col(|r| r.c_user_ms);
            let alloc = col(|r| r.allocated_fraction);
            AggregateRow {
                mode,
                algorithm,
                cell_param: f64::from_bits(bits),
                samples: rows.len(),
                c_bw_mean: mean(&bw),
                c_bw_std: std_dev(&bw),
                c_user_mean: mean(&user),
                c_user_std: std_dev(&user),
                allocated_fraction_mean: mean(&alloc),
                allocated_fraction_std: std_dev(&alloc),
                edge_count_mean: mean(&col(|r| r.edge_count as f64)),
                cloud_count_mean: mean(&col(|r| r.cloud_count as f64)),
                local_count_mean: mean(&col(|r| r.local_count as f64)),
                rounds_mean: mean(&col(|r| r.rounds as f64)),
                solver_calls_mean: mean(&col(|r| r.solver_calls as f64)),
            }
        })
        .collect()
}

/// Executes every (algorithm, cell, repetition) run on `jobs` threads.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<RunOutput> {
    config.validate()?;
    let setup = setup_for(config)?;
    let tasks = tasks(config);
    let results: Vec<Result<(Vec<DetailRow>, Vec<f64>)>> =
        pool(jobs)?.install(|| tasks.par_iter().map(|t| run_task(config, &setup, t)).collect());
    let mut detail = Vec::new();
    let mut added_per_task = Vec::new();
    for (task, result) in tasks.iter().zip(results) {
        let (rows, added) = result?;
        detail.extend(rows);
        added_per_task.push((task.algorithm, task.cell, added));
    }
    let aggregate = aggregate(&detail);
    let cells = aggregate
        .iter()
        .map(|a| {
            let added: Vec<f64> = added_per_task
                .iter()
                .filter(|(alg, cell, _)| alg.name() == a.algorithm && cell.to_bits() == a.cell_param.to_bits())
                .flat_map(|(_, _, v)| v.iter().copied())
                .collect();
            CellSummary {
                aggregate: a.clone(),
                bandwidth_added_mean: (config.experiment.mode == Mode::Dynamic).then(|| mean(&added)),
            }
        })
        .collect();
    let summary = Summary {
        schema_version: config.schema_version,
        mode: config.experiment.mode.name().to_string(),
        seed: config.experiment.seed,
        repetitions: config.experiment.repetitions,
        cells,
    };
    Ok(RunOutput { detail, aggregate, summary })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `detail.csv`, `aggregate.csv`, `summary.json` and
/// `resolved_config.toml` into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, output: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(&dir.join("detail.csv"), &output.detail)?;
    write_csv(&dir.join("aggregate.csv"), &output.aggregate)?;
    let json = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&output.summary)?;
    fs::write(&json, text + "\n").map_err(io_err(&json))?;
    let resolved = dir.join("resolved_config.toml");
    fs::write(&resolved, config.to_toml_string()).map_err(io_err(&resolved))?;
    Ok(())
}

/// Outcome of `oracle_check`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub instances: u64,
    /// Instances where the beam search matched the exhaustive optimum.
    pub matched: u64,
    pub mismatched_seeds: Vec<u64>,
    /// Instances where widening hosts beyond the path found a strictly better objective.
    pub scope_improved: u64,
    /// Mean bandwidth saved by the widened scope where both are feasible, Mbps.
    pub scope_bandwidth_gap: f64,
    pub audited_runs: u64,
    pub audit_failures: Vec<String>,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatched_seeds.is_empty() && self.audit_failures.is_empty()
    }
}

/// (seed, matched, path-scope minus wide-scope bandwidth, wide scope strictly better).
type Comparison = (u64, bool, Option<f64>, bool);

/// Solver-versus-exhaustive comparison on seeded tiny instances, plus a
/// constraint audit of every configured run.
pub fn oracle_check(config: &ExperimentConfig, jobs: usize) -> Result<OracleCheckReport> {
    config.validate()?;
    let o = &config.oracle;
    let params = SolverParams { d: o.d, beam_width: o.beam_width };
    let seeds: Vec<u64> = (0..o.instances).map(|i| mix(config.experiment.seed, i)).collect();
    let pool = pool(jobs)?;
    let comparisons: Vec<Result<Comparison>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let inst = tiny_instance(seed, o.d);
                let (sc, st, req) = (&inst.scenario, &inst.state, &inst.request);
                let got = viterbi_place(sc, st, req, &params)?;
                let candidates = candidate_paths(req, &sc.paths, &sc.coverage, o.d)?;
                let exact = brute_force_optimal(sc, st, req, &candidates, HostScope::PathOnly)?;
                let key = got.as_ref().map(|s| (s.delay, strategy_bandwidth(req, s)));
                let wide = brute_force_optimal(sc, st, req, &candidates, o.host_scope)?;
                let improved = match (wide.objective, exact.objective) {
                    (Some(w), Some(e)) => w < e,
                    (Some(_), None) => true,
                    _ => false,
                };
                let gap = match (wide.objective, exact.objective) {
                    (Some(w), Some(e)) => Some((e.1 - w.1).to_f64()),
                    _ => None,
                };
                Ok((seed, key == exact.objective, gap, improved))
            })
            .collect()
    });
    let mut report = OracleCheckReport { instances: o.instances, ..Default::default() };
    let mut gaps = Vec::new();
    for c in comparisons {
        let (seed, matched, gap, improved) = c?;
        if matched {
            report.matched += 1;
        } else {
            report.mismatched_seeds.push(seed);
        }
        report.scope_improved += improved as u64;
        gaps.extend(gap);
    }
    report.scope_bandwidth_gap = mean(&gaps);

    let setup = setup_for(config)?;
    let tasks = tasks(config);
    let audits: Vec<Result<Vec<String>>> =
        pool.install(|| tasks.par_iter().map(|t| audit_task(config, &setup, t)).collect());
    for a in audits {
        report.audited_runs += 1;
        report.audit_failures.extend(a?);
    }
    Ok(report)
}

fn audit_task(config: &ExperimentConfig, setup: &Setup, task: &Task) -> Result<Vec<String>> {
    let seed = run_seed(config.experiment.seed, task.cell, task.repetition);
    let label = format!("{} cell {} rep {}", task.algorithm, task.cell, task.repetition);
    let mut failures = Vec::new();
    match config.experiment.mode {
        Mode::Static => {
            let run = run_static_experiment(setup, task.algorithm, task.cell as usize, seed);
            let committed: Vec<(&UserRequest, &PlacementStrategy)> =
                run.requests.iter().filter_map(|r| run.outcome.strategies.get(&r.id).map(|s| (r, s))).collect();
            let report = verify_constraints(&setup.scenario, &run.state, &committed);
            if !report.is_empty() {
                failures.push(format!("{label}: {report}"));
            }
            let m = task.cell as usize;
            if run.report.solver_calls > m * (m + 1) / 2 || run.report.rounds > m {
                failures
                    .push(format!("{label}: {} solver calls in {} rounds", run.report.solver_calls, run.report.rounds));
            }
        }
        Mode::Dynamic => {
            let run =
                run_dynamic_simulation(setup, task.algorithm, task.cell, config.experiment.slots, seed, |view| {
                    let committed: Vec<(&UserRequest, &PlacementStrategy)> =
                        view.live.iter().map(|(r, s)| (r, s)).collect();
                    let report = verify_constraints(view.scenario, view.state, &committed);
                    if !report.is_empty() {
                        failures.push(format!("{label} slot {}: {report}", view.metrics.slot));
                    }
                })?;
            if !run.drained_to_initial {
                failures.push(format!("{label}: state differs from the initial one after releasing every request"));
            }
        }
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics() {
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.290_994_448_735_805_6).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ_per_cell_and_repetition() {
        let a = run_seed(1, 10.0, 0);
        assert_ne!(a, run_seed(1, 10.0, 1));
        assert_ne!(a, run_seed(1, 30.0, 0));
        assert_ne!(a, run_seed(2, 10.0, 0));
        assert_eq!(a, run_seed(1, 10.0, 0));
    }
}
