//! Acceptance criteria P1 to P8, one PASS/FAIL line each.
//!
//! P1, P2, P6, P7 and P8 are properties and fail the target when violated.
//! P3, P4 and P5 compare algorithm means against fixed margins; they are
//! reported but only fail the target when `SATVNF_STRICT_ACCEPTANCE=1`.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rayon::prelude::*;
use satvnf::algorithms::viterbi_place;
use satvnf::engine::{run_dynamic_simulation, run_static_experiment, Setup};
use satvnf::oracle::{brute_force_optimal, tiny_instance, verify_constraints, HostScope};
use satvnf::pathing::candidate_paths;
use satvnf::requests::{UserRequest, WorkloadParams};
use satvnf::runner::{mean, run_seed};
use satvnf::state::{strategy_bandwidth, PlacementStrategy};
use satvnf::{Algorithm, Scenario, SolverParams};

const ROOT_SEED: u64 = 1;
const SEEDS: u32 = 30;
const STATIC_M: [usize; 4] = [10, 110, 290, 590];
const DYNAMIC_LAMBDA: [f64; 2] = [10.0, 290.0];
const SLOTS: u64 = 50;

const P2_INSTANCES: u64 = 100;
const P2_D: usize = 4;
const P2_BEAM: usize = 10_000;

const P3_M: usize = 290;
const P3_VS_GREEDY: f64 = 0.85;
const P3_VS_VITERBI: f64 = 0.90;

const P4_SLACK_MS: f64 = 1.0;
const P4_RANGE_MS: (f64, f64) = (50.0, 100.0);

const P5_LAMBDA: f64 = 290.0;
const P5_MIN_GAIN: f64 = 0.02;
const P5_IDLE_LAMBDA: f64 = 10.0;
const FRACTION_EPS: f64 = 1e-12;

const RUNTIME_BUDGET_S: f64 = 600.0;

struct StaticResult {
    algorithm: Algorithm,
    m: usize,
    violations: Vec<String>,
    bandwidth: f64,
    delay: f64,
    rounds: usize,
    solver_calls: usize,
}

struct DynamicResult {
    algorithm: Algorithm,
    lambda: f64,
    violations: Vec<String>,
    mean_fraction: f64,
    drained: bool,
}

fn setup() -> Setup {
    Setup {
        scenario: Scenario::reference(),
        workload: WorkloadParams::default(),
        solver: SolverParams::default(),
        timing: false,
    }
}

fn static_runs(setup: &Setup) -> Vec<StaticResult> {
    let tasks: Vec<(Algorithm, usize, u32)> = Algorithm::ALL
        .iter()
        .flat_map(|&a| STATIC_M.iter().flat_map(move |&m| (0..SEEDS).map(move |r| (a, m, r))))
        .collect();
    tasks
        .par_iter()
        .map(|&(algorithm, m, rep)| {
            let run = run_static_experiment(setup, algorithm, m, run_seed(ROOT_SEED, m as f64, rep));
            let committed: Vec<(&UserRequest, &PlacementStrategy)> =
                run.requests.iter().filter_map(|r| run.outcome.strategies.get(&r.id).map(|s| (r, s))).collect();
            let report = verify_constraints(&setup.scenario, &run.state, &committed);
            StaticResult {
                algorithm,
                m,
                violations: if report.is_empty() {
                    vec![]
                } else {
                    vec![format!("{algorithm} M={m} rep {rep}: {report}")]
                },
                bandwidth: run.report.bandwidth_cost,
                delay: run.report.user_delay_cost,
                rounds: run.report.rounds,
                solver_calls: run.report.solver_calls,
            }
        })
        .collect()
}

fn dynamic_runs(setup: &Setup) -> Vec<DynamicResult> {
    let tasks: Vec<(Algorithm, f64, u32)> = Algorithm::ALL
        .iter()
        .flat_map(|&a| DYNAMIC_LAMBDA.iter().flat_map(move |&l| (0..SEEDS).map(move |r| (a, l, r))))
        .collect();
    tasks
        .par_iter()
        .map(|&(algorithm, lambda, rep)| {
            let mut violations = Vec::new();
            let run = run_dynamic_simulation(setup, algorithm, lambda, SLOTS, run_seed(ROOT_SEED, lambda, rep), |v| {
                let c: Vec<(&UserRequest, &PlacementStrategy)> = v.live.iter().map(|(r, s)| (r, s)).collect();
                let report = verify_constraints(v.scenario, v.state, &c);
                if !report.is_empty() {
                    violations.push(format!("{algorithm} lambda={lambda} rep {rep} slot {}: {report}", v.metrics.slot));
                }
            })
            .expect("valid rate");
            let fractions: Vec<f64> = run.slots.iter().map(|m| m.allocated_fraction).collect();
            DynamicResult {
                algorithm,
                lambda,
                violations,
                mean_fraction: mean(&fractions),
                drained: run.drained_to_initial,
            }
        })
        .collect()
}

fn static_mean(results: &[StaticResult], alg: Algorithm, m: usize, f: fn(&StaticResult) -> f64) -> f64 {
    mean(&results.iter().filter(|r| r.algorithm == alg && r.m == m).map(f).collect::<Vec<_>>())
}

fn dynamic_mean(results: &[DynamicResult], alg: Algorithm, lambda: f64) -> f64 {
    mean(
        &results
            .iter()
            .filter(|r| r.algorithm == alg && r.lambda == lambda)
            .map(|r| r.mean_fraction)
            .collect::<Vec<_>>(),
    )
}

fn p2() -> (bool, String) {
    let params = SolverParams { d: P2_D, beam_width: P2_BEAM };
    let mismatches: Vec<u64> = (0..P2_INSTANCES)
        .into_par_iter()
        .filter(|&seed| {
            let t = tiny_instance(seed, P2_D);
            let got = viterbi_place(&t.scenario, &t.state, &t.request, &params).expect("covered");
            let c = candidate_paths(&t.request, &t.scenario.paths, &t.scenario.coverage, P2_D).expect("covered");
            let exact =
                brute_force_optimal(&t.scenario, &t.state, &t.request, &c, HostScope::PathOnly).expect("tractable");
            got.map(|s| (s.delay, strategy_bandwidth(&t.request, &s))) != exact.objective
        })
        .collect();
    (
        mismatches.is_empty(),
        format!(
            "{}/{P2_INSTANCES} instances match the exhaustive optimum; mismatched seeds {mismatches:?}",
            P2_INSTANCES - mismatches.len() as u64
        ),
    )
}

fn p8() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("config.toml");
    fs::write(&config, "[experiment]\nm_values = [10, 290, 590]\nrepetitions = 4\nseed = 7\n").expect("write config");
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let out = dir.path().join(format!("jobs{jobs}"));
        let run = Command::new(env!("CARGO_BIN_EXE_satvnf"))
            .args(["run", config.to_str().unwrap(), "--jobs", jobs, "--out-dir", out.to_str().unwrap()])
            .output()
            .expect("binary runs");
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        outputs.push(fs::read(out.join("detail.csv")).expect("detail.csv"));
    }
    let same = outputs[0] == outputs[1];
    (same, format!("detail.csv at --jobs 1 and --jobs 8: {} bytes each, identical = {same}", outputs[0].len()))
}

fn line(id: &str, pass: bool, strict: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let kind = if strict { "" } else { " (reported)" };
    println!("{id} {tag}{kind}: {detail}");
}

fn main() -> ExitCode {
    // libtest flags such as `--list` or a name filter come through here.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let strict_directional = std::env::var("SATVNF_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    let start = Instant::now();
    let setup = setup();
    let statics = static_runs(&setup);
    let dynamics = dynamic_runs(&setup);
    let p1_secs = start.elapsed().as_secs_f64();
    let mut hard_failures = 0;
    let mut report = |id: &str, pass: bool, hard: bool, detail: String| {
        line(id, pass, hard, &detail);
        if !pass && hard {
            hard_failures += 1;
        }
    };

    // P1
    let violations: Vec<&String> =
        statics.iter().flat_map(|r| &r.violations).chain(dynamics.iter().flat_map(|r| &r.violations)).collect();
    report(
        "P1",
        violations.is_empty() && p1_secs < RUNTIME_BUDGET_S,
        true,
        format!(
            "{} static and {} dynamic runs audited in {p1_secs:.1} s, {} violation reports{}",
            statics.len(),
            dynamics.len(),
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // P2
    let (pass, detail) = p2();
    report("P2", pass, true, detail);

    // P3
    let bw = |a| static_mean(&statics, a, P3_M, |r| r.bandwidth);
    let (d, g, v) = (bw(Algorithm::Dvnfp), bw(Algorithm::Greedy), bw(Algorithm::Viterbi));
    report(
        "P3",
        d <= P3_VS_GREEDY * g && d <= P3_VS_VITERBI * v,
        strict_directional,
        format!(
            "M={P3_M}: C_bw D-VNFP {d:.3}, Greedy {g:.3}, Viterbi {v:.3} Mbps; D/G {:.4} (need <= {P3_VS_GREEDY}), D/V {:.4} (need <= {P3_VS_VITERBI})",
            d / g,
            d / v
        ),
    );

    // P4
    let delay = |a| static_mean(&statics, a, P3_M, |r| r.delay);
    let (d, g, v) = (delay(Algorithm::Dvnfp), delay(Algorithm::Greedy), delay(Algorithm::Viterbi));
    let in_range = [d, g, v].iter().all(|x| (P4_RANGE_MS.0..=P4_RANGE_MS.1).contains(x));
    report(
        "P4",
        d < v && v <= g + P4_SLACK_MS && in_range,
        strict_directional,
        format!(
            "M={P3_M}: C_user D-VNFP {d:.4}, Viterbi {v:.4}, Greedy {g:.4} ms; D < V {}, V <= G + {P4_SLACK_MS} {}, all in [{}, {}] {in_range}",
            d < v,
            v <= g + P4_SLACK_MS,
            P4_RANGE_MS.0,
            P4_RANGE_MS.1
        ),
    );

    // P5
    let frac = |a, l| dynamic_mean(&dynamics, a, l);
    let (d, v, g) =
        (frac(Algorithm::Dvnfp, P5_LAMBDA), frac(Algorithm::Viterbi, P5_LAMBDA), frac(Algorithm::Greedy, P5_LAMBDA));
    let idle: Vec<f64> = Algorithm::ALL.iter().map(|&a| frac(a, P5_IDLE_LAMBDA)).collect();
    let idle_ok = idle.iter().all(|f| (f - 1.0).abs() <= FRACTION_EPS);
    report(
        "P5",
        d >= v && v >= g && d - g >= P5_MIN_GAIN && idle_ok,
        strict_directional,
        format!(
            "lambda={P5_LAMBDA}: allocated D-VNFP {d:.4}, Viterbi {v:.4}, Greedy {g:.4}; D >= V {}, V >= G {}, D - G = {:.4} (need >= {P5_MIN_GAIN}); lambda={P5_IDLE_LAMBDA}: {idle:?}",
            d >= v,
            v >= g,
            d - g
        ),
    );

    // P6
    let undrained = dynamics.iter().filter(|r| !r.drained).count();
    report(
        "P6",
        undrained == 0,
        true,
        format!("{} dynamic runs, {undrained} differ from the initial state after draining", dynamics.len()),
    );

    // P7
    let over: Vec<String> = statics
        .iter()
        .filter(|r| r.solver_calls > r.m * (r.m + 1) / 2 || r.rounds > r.m)
        .map(|r| format!("{} M={}: {} calls, {} rounds", r.algorithm, r.m, r.solver_calls, r.rounds))
        .collect();
    let worst = statics.iter().map(|r| r.rounds).max().unwrap_or(0);
    report(
        "P7",
        over.is_empty(),
        true,
        format!(
            "{} static runs, {} over the bound, max rounds {worst}{}",
            statics.len(),
            over.len(),
            over.first().map(|o| format!("; first: {o}")).unwrap_or_default()
        ),
    );

    // P8
    let (pass, detail) = p8();
    report("P8", pass, true, detail);

    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if hard_failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
