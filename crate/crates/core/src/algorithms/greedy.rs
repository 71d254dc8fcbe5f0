//! Path-ordered greedy baseline: each VNF takes the cheapest feasible host
//! given only the previous VNF's host.

use super::{candidate_delay, edge_strategy, links_fit, node_fits, path_selection_place, SolverParams};
use crate::error::Result;
use crate::pathing::{candidate_paths, Candidate};
use crate::requests::UserRequest;
use crate::scenario::Scenario;
use crate::state::{Delta, NetworkState, PlacementStrategy};

/// Greedy assignment on one candidate path, ignoring the delay bound.
pub(crate) fn greedy_on_path(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    candidate: &Candidate<'_>,
) -> Option<PlacementStrategy> {
    let path = candidate.path;
    let last = path.nodes.len() - 1;
    let n = request.chain_len();
    let mut shadow = Delta::default();
    let mut positions = vec![0usize];
    for stage in 1..n {
        let prev = *positions.last().expect("non-empty");
        let bw = request.chain_bandwidth[stage - 1];
        let vnf = &request.vnfs[stage];
        let range = if stage == n - 1 { last..=last } else { prev..=last };
        // Incremental cost grows with distance, so the first feasible
        // position in path order is the cheapest.
        let pos = range.into_iter().find(|&pos| {
            node_fits(state, &shadow, path.nodes[pos], vnf) && links_fit(state, &shadow, &path.links[prev..pos], bw)
        })?;
        shadow.add_node(path.nodes[pos], vnf.cpu_demand, vnf.mem_demand);
        shadow.add_links(&path.links[prev..pos], bw);
        positions.push(pos);
    }
    Some(edge_strategy(scenario, request, candidate, &positions))
}

/// First candidate path (by delay) the greedy pass completes on; falls back
/// to the cloud when none does.
pub fn greedy_place(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    params: &SolverParams,
) -> Result<Option<PlacementStrategy>> {
    let candidates = candidate_paths(request, &scenario.paths, &scenario.coverage, params.d)?;
    for candidate in &candidates {
        if candidate_delay(request, candidate) > request.max_delay {
            continue;
        }
        if let Some(strategy) = greedy_on_path(scenario, state, request, candidate) {
            return Ok(Some(strategy));
        }
    }
    path_selection_place(scenario, state, request, params)
}
