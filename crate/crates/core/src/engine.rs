//! Orchestration: distributed rounds with first-come-first-serve commits,
//! the centralized baselines, and the static and time-slotted drivers.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{greedy_place, path_selection_place, viterbi_place, Algorithm, Decision, SolverParams};
use crate::error::{Error, Result};
use crate::requests::{generate_request, sample_arrivals, RequestId, UserRequest, WorkloadParams};
use crate::scenario::Scenario;
use crate::state::{bandwidth_cost, user_delay_cost, CostReport, NetworkState, PlacementStrategy};
use crate::topology::SatelliteId;
use crate::units::Fixed;

/// A satellite deciding for the requests routed to it in one round. All
/// agents of a round read the same snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub satellite: SatelliteId,
    pub requests: Vec<RequestId>,
}

/// Partition of a round's input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundOutcome {
    pub committed: Vec<(RequestId, PlacementStrategy)>,
    /// Lost a resource conflict at commit time; solved again next round.
    pub deferred: Vec<RequestId>,
    /// Uncovered, or no strategy on the snapshot.
    pub failed_local: Vec<RequestId>,
    pub agents: Vec<Agent>,
    pub solver_calls: usize,
}

/// Result of placing one batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchOutcome {
    pub strategies: BTreeMap<RequestId, PlacementStrategy>,
    pub failed_local: Vec<RequestId>,
    pub rounds: usize,
    pub solver_calls: usize,
}

impl BatchOutcome {
    pub fn edge_count(&self) -> usize {
        self.strategies.values().filter(|s| s.is_edge()).count()
    }

    pub fn cloud_count(&self) -> usize {
        self.strategies.values().filter(|s| s.is_cloud()).count()
    }
}

fn fcfs_order<'a>(requests: &[&'a UserRequest]) -> Vec<&'a UserRequest> {
    let mut ordered = requests.to_vec();
    ordered.sort_by_key(|r| (r.arrival_slot, r.id));
    ordered
}

/// One solver invocation as the given algorithm defines it.
pub fn decide(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    params: &SolverParams,
    algorithm: Algorithm,
) -> Decision {
    let result = match algorithm {
        Algorithm::Dvnfp => viterbi_place(scenario, state, request, params).and_then(|s| match s {
            Some(s) => Ok(Some(s)),
            None => path_selection_place(scenario, state, request, params),
        }),
        Algorithm::Greedy => greedy_place(scenario, state, request, params),
        Algorithm::Viterbi => viterbi_place(scenario, state, request, params),
    };
    match result {
        Ok(Some(s)) => Decision::Place(s),
        Ok(None) => Decision::NoStrategy,
        Err(_) => Decision::Uncovered,
    }
}

/// One distributed round: parallel decisions on a frozen snapshot, then
/// commits in (arrival slot, id) order with a feasibility re-check against
/// the live state.
pub fn dvnfp_round<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &mut NetworkState,
    requests: &[&UserRequest],
    params: &SolverParams,
    rng: &mut R,
) -> RoundOutcome {
    let ordered = fcfs_order(requests);
    let mut outcome = RoundOutcome::default();
    let mut agents: BTreeMap<SatelliteId, Vec<RequestId>> = BTreeMap::new();
    for r in &ordered {
        let neighbours = scenario.coverage.neighbouring_satellites(r.source).unwrap_or_default();
        if !neighbours.is_empty() {
            let pick = neighbours[rng.gen_range(0..neighbours.len())];
            agents.entry(pick).or_default().push(r.id);
        }
    }
    outcome.agents = agents.into_iter().map(|(satellite, requests)| Agent { satellite, requests }).collect();

    let snapshot = state.clone();
    let decisions: Vec<Decision> =
        ordered.par_iter().map(|r| decide(scenario, &snapshot, r, params, Algorithm::Dvnfp)).collect();
    outcome.solver_calls = ordered.len();

    for (r, decision) in ordered.iter().zip(decisions) {
        match decision {
            Decision::Place(strategy) => match state.commit(scenario, r, &strategy) {
                Ok(()) => outcome.committed.push((r.id, strategy)),
                Err(_) => outcome.deferred.push(r.id),
            },
            Decision::NoStrategy | Decision::Uncovered => outcome.failed_local.push(r.id),
        }
    }
    outcome
}

/// Repeats rounds on the deferred set until it is empty or a round
/// commits nothing.
pub fn dvnfp_place_all<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &mut NetworkState,
    requests: &[&UserRequest],
    params: &SolverParams,
    rng: &mut R,
) -> BatchOutcome {
    let by_id: BTreeMap<RequestId, &UserRequest> = requests.iter().map(|r| (r.id, *r)).collect();
    let mut pending: Vec<&UserRequest> = requests.to_vec();
    let mut out = BatchOutcome::default();
    while !pending.is_empty() {
        let round = dvnfp_round(scenario, state, &pending, params, rng);
        out.rounds += 1;
        out.solver_calls += round.solver_calls;
        out.failed_local.extend(round.failed_local);
        let stalled = round.committed.is_empty();
        out.strategies.extend(round.committed);
        if stalled {
            out.failed_local.extend(round.deferred);
            break;
        }
        pending = round.deferred.iter().map(|id| by_id[id]).collect();
    }
    out.failed_local.sort_unstable();
    out
}

/// Sequential placement against the live state in (arrival slot, id) order.
pub fn centralized_place_all(
    scenario: &Scenario,
    state: &mut NetworkState,
    requests: &[&UserRequest],
    params: &SolverParams,
    algorithm: Algorithm,
) -> BatchOutcome {
    let mut out = BatchOutcome::default();
    if requests.is_empty() {
        return out;
    }
    out.rounds = 1;
    for r in fcfs_order(requests) {
        out.solver_calls += 1;
        match decide(scenario, state, r, params, algorithm) {
            Decision::Place(strategy) => {
                state.commit(scenario, r, &strategy).expect("solver output is feasible on the state it read");
                out.strategies.insert(r.id, strategy);
            }
            Decision::NoStrategy | Decision::Uncovered => out.failed_local.push(r.id),
        }
    }
    out.failed_local.sort_unstable();
    out
}

/// Places a batch with the chosen algorithm.
pub fn place_batch<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &mut NetworkState,
    requests: &[&UserRequest],
    params: &SolverParams,
    algorithm: Algorithm,
    agent_rng: &mut R,
) -> BatchOutcome {
    match algorithm {
        Algorithm::Dvnfp => dvnfp_place_all(scenario, state, requests, params, agent_rng),
        other => centralized_place_all(scenario, state, requests, params, other),
    }
}

/// Everything a run needs besides the workload size.
#[derive(Clone, Debug)]
pub struct Setup {
    pub scenario: Scenario,
    pub workload: WorkloadParams,
    pub solver: SolverParams,
    /// Record wall-clock time per run or slot; zero otherwise.
    pub timing: bool,
}

/// Independent RNG streams of one (cell, repetition) run. The workload
/// stream does not depend on the algorithm, so all algorithms of a run see
/// the same requests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub workload: u64,
    pub agents: u64,
}

impl RunSeeds {
    pub fn from_run_seed(seed: u64) -> Self {
        RunSeeds { workload: mix(seed, 0), agents: mix(seed, 1) }
    }
}

/// SplitMix64 finalizer over `a` and `b`.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn report_for(state: &NetworkState, requests: &[&UserRequest], outcome: &BatchOutcome) -> CostReport {
    let n = requests.len();
    let deployed = outcome.strategies.len();
    CostReport {
        bandwidth_cost: bandwidth_cost(state),
        user_delay_cost: user_delay_cost(outcome.strategies.values().map(Some)),
        allocated_fraction: if n == 0 { 1.0 } else { deployed as f64 / n as f64 },
        requests: n,
        edge_count: outcome.edge_count(),
        cloud_count: outcome.cloud_count(),
        local_count: n - deployed,
        rounds: outcome.rounds,
        solver_calls: outcome.solver_calls,
        none_deployed: deployed == 0,
    }
}

/// A static run with its full trace, for auditing.
#[derive(Clone, Debug)]
pub struct StaticRun {
    pub report: CostReport,
    pub requests: Vec<UserRequest>,
    pub outcome: BatchOutcome,
    pub state: NetworkState,
    pub wall_ms: f64,
}

pub fn generate_batch(setup: &Setup, m: usize, seed: u64) -> Vec<UserRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m as u64).map(|id| generate_request(&mut rng, &setup.scenario.coverage, &setup.workload, id, 0)).collect()
}

/// `m` requests arriving together on an empty network.
pub fn run_static_experiment(setup: &Setup, algorithm: Algorithm, m: usize, seed: u64) -> StaticRun {
    let seeds = RunSeeds::from_run_seed(seed);
    let requests = generate_batch(setup, m, seeds.workload);
    let mut agent_rng = ChaCha8Rng::seed_from_u64(seeds.agents);
    let mut state = NetworkState::new(&setup.scenario.network);
    let refs: Vec<&UserRequest> = requests.iter().collect();
    let start = Instant::now();
    let outcome = place_batch(&setup.scenario, &mut state, &refs, &setup.solver, algorithm, &mut agent_rng);
    let wall_ms = if setup.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let report = report_for(&state, &refs, &outcome);
    StaticRun { report, requests, outcome, state, wall_ms }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: u64,
    pub arrivals: usize,
    /// Mean ISL usage of all live requests after placement, Mbps.
    pub bandwidth_cost: f64,
    /// Part of `bandwidth_cost` added by this slot's placements, Mbps.
    pub bandwidth_added: f64,
    /// Mean delay of this slot's deployed requests, ms.
    pub user_delay_cost: f64,
    pub allocated_fraction: f64,
    pub edge_count: usize,
    pub cloud_count: usize,
    pub local_count: usize,
    pub rounds: usize,
    pub solver_calls: usize,
    pub live_requests: usize,
    pub wall_ms: f64,
}

/// What an observer sees at the end of each slot.
pub struct SlotView<'a> {
    pub metrics: &'a SlotMetrics,
    pub scenario: &'a Scenario,
    pub state: &'a NetworkState,
    /// Requests holding resources, with their strategies.
    pub live: &'a [(UserRequest, PlacementStrategy)],
}

#[derive(Clone, Debug)]
pub struct DynamicRun {
    pub slots: Vec<SlotMetrics>,
    /// The state after releasing every live request equals a fresh one.
    pub drained_to_initial: bool,
}

/// Per slot: release expired requests, draw Poisson arrivals, place them,
/// record metrics. Requests arriving in slot `t` with duration `k` hold
/// resources through slot `t + k - 1`.
pub fn run_dynamic_simulation(
    setup: &Setup,
    algorithm: Algorithm,
    lambda: f64,
    slots: u64,
    seed: u64,
    mut observer: impl FnMut(&SlotView<'_>),
) -> Result<DynamicRun> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", "must be finite and >= 0"));
    }
    let scenario = &setup.scenario;
    let seeds = RunSeeds::from_run_seed(seed);
    let mut workload_rng = ChaCha8Rng::seed_from_u64(seeds.workload);
    let mut agent_rng = ChaCha8Rng::seed_from_u64(seeds.agents);
    let initial = NetworkState::new(&scenario.network);
    let mut state = initial.clone();
    let mut live: Vec<(UserRequest, PlacementStrategy)> = Vec::new();
    let mut next_id: RequestId = 0;
    let mut out = Vec::with_capacity(slots as usize);

    for slot in 0..slots {
        let (expired, kept): (Vec<_>, Vec<_>) =
            live.into_iter().partition(|(r, _)| r.arrival_slot + r.duration <= slot);
        for (r, s) in &expired {
            state.release(scenario, r, s)?;
        }
        live = kept;

        let n = sample_arrivals(&mut workload_rng, lambda) as usize;
        let batch: Vec<UserRequest> = (0..n)
            .map(|i| generate_request(&mut workload_rng, &scenario.coverage, &setup.workload, next_id + i as u64, slot))
            .collect();
        next_id += n as u64;

        let isl_before: Fixed = state.used().isl.iter().sum();
        let refs: Vec<&UserRequest> = batch.iter().collect();
        let start = Instant::now();
        let outcome = place_batch(scenario, &mut state, &refs, &setup.solver, algorithm, &mut agent_rng);
        let wall_ms = if setup.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let report = report_for(&state, &refs, &outcome);
        let isl_after: Fixed = state.used().isl.iter().sum();
        let links = scenario.network.link_count().max(1) as f64;

        let mut strategies = outcome.strategies.clone();
        for r in batch {
            if let Some(s) = strategies.remove(&r.id) {
                live.push((r, s));
            }
        }
        let metrics = SlotMetrics {
            slot,
            arrivals: n,
            bandwidth_cost: report.bandwidth_cost,
            bandwidth_added: (isl_after - isl_before).to_f64() / links,
            user_delay_cost: report.user_delay_cost,
            allocated_fraction: report.allocated_fraction,
            edge_count: report.edge_count,
            cloud_count: report.cloud_count,
            local_count: report.local_count,
            rounds: report.rounds,
            solver_calls: report.solver_calls,
            live_requests: live.len(),
            wall_ms,
        };
        observer(&SlotView { metrics: &metrics, scenario, state: &state, live: &live });
        out.push(metrics);
    }

    for (r, s) in &live {
        state.release(scenario, r, s)?;
    }
    Ok(DynamicRun { slots: out, drained_to_initial: state == initial })
}
