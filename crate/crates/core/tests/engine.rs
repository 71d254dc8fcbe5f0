mod common;

use common::{centre, request, scenario, vnf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satvnf::engine::{
    centralized_place_all, dvnfp_place_all, dvnfp_round, generate_batch, run_dynamic_simulation, run_static_experiment,
    RunSeeds, Setup,
};
use satvnf::requests::{UserRequest, WorkloadParams};
use satvnf::topology::GroundPoint;
use satvnf::{Algorithm, NetworkState, Scenario, SolverParams};

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(9)
}

fn setup() -> Setup {
    Setup {
        scenario: Scenario::reference(),
        workload: WorkloadParams::default(),
        solver: SolverParams::default(),
        timing: false,
    }
}

#[test]
fn conflicting_requests_commit_one_and_defer_the_other() {
    let sc = scenario(1, 1, &[], 0.0);
    let p = centre(&sc, 0);
    let a = request(1, vec![vnf(60.0, 10.0, 20.0)], &[1.0, 1.0], p, p);
    let b = request(2, vec![vnf(60.0, 10.0, 20.0)], &[1.0, 1.0], p, p);
    let mut state = NetworkState::new(&sc.network);
    let round = dvnfp_round(&sc, &mut state, &[&b, &a], &SolverParams::default(), &mut rng());
    assert_eq!(round.committed.len(), 1);
    assert_eq!(round.committed[0].0, 1, "earlier id wins ties in arrival slot");
    assert_eq!(round.deferred, vec![2]);
    assert!(round.failed_local.is_empty());
    assert_eq!(round.solver_calls, 2);

    // The retry sees the live state, finds nothing, and stops the batch.
    let mut state = NetworkState::new(&sc.network);
    let out = dvnfp_place_all(&sc, &mut state, &[&a, &b], &SolverParams::default(), &mut rng());
    assert_eq!(out.strategies.len(), 1);
    assert_eq!(out.failed_local, vec![2]);
    assert_eq!(out.rounds, 2);
    assert_eq!(out.solver_calls, 3);
}

#[test]
fn disjoint_requests_finish_in_one_round() {
    let sc = scenario(1, 3, &[], 0.0);
    let a = request(1, vec![vnf(60.0, 10.0, 20.0)], &[1.0, 1.0], centre(&sc, 0), centre(&sc, 0));
    let b = request(2, vec![vnf(60.0, 10.0, 20.0)], &[1.0, 1.0], centre(&sc, 1), centre(&sc, 1));
    let mut state = NetworkState::new(&sc.network);
    let out = dvnfp_place_all(&sc, &mut state, &[&a, &b], &SolverParams::default(), &mut rng());
    assert_eq!(out.strategies.len(), 2);
    assert_eq!(out.rounds, 1);
    assert_eq!(out.solver_calls, 2);
    assert_eq!(state.committed_count(), 2);
}

#[test]
fn uncovered_request_runs_locally() {
    let sc = scenario(1, 3, &[], 0.0);
    let outside = GroundPoint::new(50.0, 50.0);
    let lost = request(1, vec![vnf(1.0, 1.0, 20.0)], &[1.0, 1.0], outside, centre(&sc, 0));
    let ok = request(2, vec![vnf(1.0, 1.0, 20.0)], &[1.0, 1.0], centre(&sc, 0), centre(&sc, 2));
    for alg in Algorithm::ALL {
        let mut state = NetworkState::new(&sc.network);
        let out = match alg {
            Algorithm::Dvnfp => dvnfp_place_all(&sc, &mut state, &[&lost, &ok], &SolverParams::default(), &mut rng()),
            other => centralized_place_all(&sc, &mut state, &[&lost, &ok], &SolverParams::default(), other),
        };
        assert_eq!(out.failed_local, vec![1], "{alg}");
        assert_eq!(out.strategies.keys().copied().collect::<Vec<_>>(), vec![2], "{alg}");
    }
}

#[test]
fn empty_batch() {
    let s = setup();
    for alg in Algorithm::ALL {
        let run = run_static_experiment(&s, alg, 0, 1);
        assert_eq!(run.report.rounds, 0, "{alg}");
        assert_eq!(run.report.solver_calls, 0);
        assert_eq!(run.report.allocated_fraction, 1.0);
        assert_eq!(run.report.bandwidth_cost, 0.0);
        assert!(run.report.none_deployed);
    }
}

#[test]
fn single_request_uses_one_call() {
    let s = setup();
    for alg in Algorithm::ALL {
        let run = run_static_experiment(&s, alg, 1, 4);
        assert_eq!((run.report.rounds, run.report.solver_calls), (1, 1), "{alg}");
        assert_eq!(run.report.edge_count + run.report.cloud_count + run.report.local_count, 1);
    }
}

#[test]
fn round_and_call_bounds_hold() {
    let s = setup();
    for seed in 0..5 {
        for m in [20usize, 150, 400] {
            let run = run_static_experiment(&s, Algorithm::Dvnfp, m, seed);
            let r = &run.report;
            assert!(r.rounds >= 1 && r.rounds <= m, "rounds {}", r.rounds);
            assert!(r.solver_calls >= m && r.solver_calls <= m * (m + 1) / 2);
            assert_eq!(r.edge_count + r.cloud_count + r.local_count, m);
            assert_eq!(run.outcome.strategies.len() + run.outcome.failed_local.len(), m);
            assert_eq!(run.state.committed_count(), run.outcome.strategies.len());
        }
    }
}

#[test]
fn algorithms_see_the_same_workload() {
    let s = setup();
    let reqs: Vec<Vec<UserRequest>> =
        Algorithm::ALL.iter().map(|&a| run_static_experiment(&s, a, 30, 12).requests).collect();
    assert_eq!(reqs[0], reqs[1]);
    assert_eq!(reqs[0], reqs[2]);
    assert_eq!(reqs[0], generate_batch(&s, 30, RunSeeds::from_run_seed(12).workload));
}

#[test]
fn static_runs_are_reproducible() {
    let s = setup();
    let a = run_static_experiment(&s, Algorithm::Dvnfp, 200, 3);
    let b = run_static_experiment(&s, Algorithm::Dvnfp, 200, 3);
    assert_eq!(a.report, b.report);
    assert_eq!(a.outcome, b.outcome);
    assert_eq!(a.state, b.state);
    assert_eq!(a.wall_ms, 0.0);
}

#[test]
fn zero_rate_gives_idle_slots() {
    let run = run_dynamic_simulation(&setup(), Algorithm::Dvnfp, 0.0, 10, 5, |_| {}).unwrap();
    assert_eq!(run.slots.len(), 10);
    for m in &run.slots {
        assert_eq!(m.arrivals, 0);
        assert_eq!(m.bandwidth_cost, 0.0);
        assert_eq!(m.user_delay_cost, 0.0);
        assert_eq!(m.allocated_fraction, 1.0);
        assert_eq!((m.rounds, m.solver_calls, m.live_requests), (0, 0, 0));
    }
    assert!(run.drained_to_initial);
}

#[test]
fn dynamic_live_set_matches_state() {
    let mut seen = 0;
    let run = run_dynamic_simulation(&setup(), Algorithm::Greedy, 60.0, 20, 8, |view| {
        assert_eq!(view.live.len(), view.state.committed_count());
        assert_eq!(view.metrics.live_requests, view.live.len());
        for (r, _) in view.live {
            assert!(r.arrival_slot <= view.metrics.slot);
            assert!(r.arrival_slot + r.duration > view.metrics.slot);
        }
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 20);
    assert!(run.drained_to_initial);
}

#[test]
fn negative_rate_is_rejected() {
    assert!(run_dynamic_simulation(&setup(), Algorithm::Viterbi, -1.0, 3, 0, |_| {}).is_err());
    assert!(run_dynamic_simulation(&setup(), Algorithm::Viterbi, f64::NAN, 3, 0, |_| {}).is_err());
}
