//! Stage-wise beam search over VNF hosts along each candidate path.

use super::{candidate_delay, edge_strategy, links_fit, node_fits, SolverParams};
use crate::error::Result;
use crate::pathing::{candidate_paths, Candidate};
use crate::requests::UserRequest;
use crate::scenario::Scenario;
use crate::state::{Delta, NetworkState, PlacementStrategy};
use crate::topology::SatelliteId;
use crate::units::Fixed;

/// A partial assignment of the first `positions.len()` VNFs.
#[derive(Clone, Debug)]
struct BeamState {
    /// Index into the candidate path's nodes, one per assigned VNF.
    positions: Vec<usize>,
    /// Sum of chain-edge bandwidth times hops so far.
    cost: Fixed,
    /// Resources this partial assignment consumes on top of the snapshot.
    shadow: Delta,
}

impl BeamState {
    fn distinct_hosts(&self) -> usize {
        // Positions never decrease, so runs are distinct hosts.
        1 + self.positions.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn rank_key(&self, nodes: &[SatelliteId]) -> (Fixed, usize, Vec<SatelliteId>) {
        (self.cost, self.distinct_hosts(), self.positions.iter().map(|&p| nodes[p]).collect())
    }
}

/// Extends `from` by placing VNF `stage` at `pos`, or `None` when the
/// node or the connecting links lack room.
fn extend(
    state: &NetworkState,
    request: &UserRequest,
    candidate: &Candidate<'_>,
    from: &BeamState,
    stage: usize,
    pos: usize,
) -> Option<BeamState> {
    let path = candidate.path;
    let prev = *from.positions.last().expect("source placed first");
    let vnf = &request.vnfs[stage];
    if !node_fits(state, &from.shadow, path.nodes[pos], vnf) {
        return None;
    }
    let bw = request.chain_bandwidth[stage - 1];
    let links = &path.links[prev..pos];
    if !links_fit(state, &from.shadow, links, bw) {
        return None;
    }
    let mut next = from.clone();
    next.shadow.add_node(path.nodes[pos], vnf.cpu_demand, vnf.mem_demand);
    next.shadow.add_links(links, bw);
    next.cost += bw.times(pos - prev);
    next.positions.push(pos);
    Some(next)
}

/// Best assignment on one candidate path, ignoring the delay bound.
pub fn viterbi_on_path(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    candidate: &Candidate<'_>,
    beam_width: usize,
) -> Option<PlacementStrategy> {
    let path = candidate.path;
    let last = path.nodes.len() - 1;
    let n = request.chain_len();
    let mut beam = vec![BeamState { positions: vec![0], cost: Fixed::ZERO, shadow: Delta::default() }];
    for stage in 1..n {
        let mut next = Vec::new();
        for st in &beam {
            let prev = *st.positions.last().expect("non-empty");
            let range = if stage == n - 1 { last..=last } else { prev..=last };
            for pos in range {
                if let Some(s) = extend(state, request, candidate, st, stage, pos) {
                    next.push(s);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        let mut keyed: Vec<_> = next.into_iter().map(|s| (s.rank_key(&path.nodes), s)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.truncate(beam_width);
        beam = keyed.into_iter().map(|(_, s)| s).collect();
    }
    let best = beam.into_iter().next()?;
    Some(edge_strategy(scenario, request, candidate, &best.positions))
}

/// Walks candidate paths by ascending delay and returns the cheapest
/// assignment on the first path that admits one. `Err` only when a side
/// of the request has no neighbouring satellite.
pub fn viterbi_place(
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
        if let Some(strategy) = viterbi_on_path(scenario, state, request, candidate, params.beam_width) {
            return Ok(Some(strategy));
        }
    }
    Ok(None)
}
