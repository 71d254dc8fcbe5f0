//! Per-request placement solvers. Every solver is a pure function of the
//! request and a read-only snapshot; none of them mutates the state.

mod greedy;
mod path_selection;
mod viterbi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use greedy::greedy_place;
pub use path_selection::path_selection_place;
pub use viterbi::{viterbi_on_path, viterbi_place};

use crate::error::{Error, Result};
use crate::pathing::{Candidate, Path};
use crate::requests::{UserRequest, Vnf};
use crate::scenario::Scenario;
use crate::state::{Delta, EdgePlacement, NetworkState, Placement, PlacementStrategy};
use crate::topology::{LinkId, SatelliteId};
use crate::units::Fixed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Candidate paths kept per request.
    pub d: usize,
    /// States kept per beam-search stage.
    pub beam_width: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { d: 8, beam_width: 4 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("solver.d", "must be >= 1"));
        }
        if self.beam_width == 0 {
            return Err(Error::invalid("solver.beam_width", "must be >= 1"));
        }
        Ok(())
    }
}

/// Placement procedure selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Distributed rounds: Viterbi, then Path Selection, FCFS commits.
    Dvnfp,
    /// Centralized greedy with Path Selection fallback.
    Greedy,
    /// Centralized Viterbi, edge only.
    Viterbi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dvnfp, Algorithm::Greedy, Algorithm::Viterbi];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dvnfp => "dvnfp",
            Algorithm::Greedy => "greedy",
            Algorithm::Viterbi => "viterbi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dvnfp" | "d-vnfp" => Ok(Algorithm::Dvnfp),
            "greedy" => Ok(Algorithm::Greedy),
            "viterbi" => Ok(Algorithm::Viterbi),
            other => Err(Error::invalid("algorithms", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Outcome of one solver invocation on one request.
#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Place(PlacementStrategy),
    /// Covered, but no feasible strategy on the snapshot.
    NoStrategy,
    /// No neighbouring satellite on at least one side.
    Uncovered,
}

pub(crate) fn node_fits(state: &NetworkState, shadow: &Delta, sat: SatelliteId, vnf: &Vnf) -> bool {
    state.free_cpu(sat) - shadow.cpu_at(sat) >= vnf.cpu_demand
        && state.free_mem(sat) - shadow.mem_at(sat) >= vnf.mem_demand
}

pub(crate) fn links_fit(state: &NetworkState, shadow: &Delta, links: &[LinkId], bandwidth: Fixed) -> bool {
    links.iter().all(|&l| state.free_isl(l) - shadow.isl_at(l) >= bandwidth)
}

pub(crate) fn ground_fits(state: &NetworkState, shadow: &Delta, index: usize, bandwidth: Fixed) -> bool {
    state.free_ground(index) - shadow.ground_at(index) >= bandwidth
}

/// Delay a candidate path implies once compute time is added; hosts on the
/// path in forward order do not change it.
pub(crate) fn candidate_delay(request: &UserRequest, candidate: &Candidate<'_>) -> Fixed {
    request.compute_delay() + candidate.delay
}

/// Edge strategy from per-VNF positions along `path` (non-decreasing, first
/// 0, last the final node).
pub(crate) fn edge_strategy(
    scenario: &Scenario,
    request: &UserRequest,
    candidate: &Candidate<'_>,
    positions: &[usize],
) -> PlacementStrategy {
    let path: &Path = candidate.path;
    let hosts = positions.iter().map(|&p| path.nodes[p]).collect();
    let routes = positions.windows(2).map(|w| path.sub_path(&scenario.network, w[0], w[1])).collect();
    PlacementStrategy {
        request: request.id,
        placement: Placement::Edge(EdgePlacement { hosts, routes }),
        delay: candidate_delay(request, candidate),
    }
}
