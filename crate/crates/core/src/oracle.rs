//! Brute-force references for the solvers and an independent audit of
//! engine output. Nothing here shares code with the solvers' search.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathing::{Candidate, Path};
use crate::requests::{RequestId, UserRequest};
use crate::scenario::Scenario;
use crate::state::{
    strategy_bandwidth, EdgePlacement, NetworkState, Placement, PlacementStrategy, Resource, Side, Usage, Violation,
};
use crate::topology::{LinkId, SatelliteId};
use crate::units::Fixed;

pub const MAX_INTERIOR: usize = 4;
pub const MAX_SATELLITES: usize = 6;
pub const MAX_CANDIDATES: usize = 4;

/// Which satellites the oracle may use as hosts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostScope {
    /// Satellites on the candidate path, with traffic moving forward along it.
    #[default]
    PathOnly,
    /// Any satellite; chain edges use the lowest-delay path between hosts.
    AllSatellites,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub best: Option<PlacementStrategy>,
    /// (delay, bandwidth) of `best`.
    pub objective: Option<(Fixed, Fixed)>,
    /// Host tuples examined, over all candidate paths.
    pub enumerated: u64,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.best.is_some()
    }
}

/// Closed form for the number of tuples `brute_force_optimal` examines.
pub fn enumeration_count(
    scenario: &Scenario,
    request: &UserRequest,
    candidates: &[Candidate<'_>],
    scope: HostScope,
) -> u64 {
    let k = request.interior_count() as u32;
    candidates
        .iter()
        .map(|c| {
            let hosts = match scope {
                HostScope::PathOnly => c.path.nodes.len(),
                HostScope::AllSatellites => scenario.network.satellite_count(),
            } as u64;
            hosts.pow(k)
        })
        .sum()
}

/// Exhaustive search over every host tuple on every candidate. With
/// `PathOnly` the ordering is lexicographic: the first candidate (in the
/// given order) with any feasible tuple, then minimum bandwidth. With
/// `AllSatellites` it is minimum (delay, bandwidth) over everything.
pub fn brute_force_optimal(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    candidates: &[Candidate<'_>],
    scope: HostScope,
) -> Result<OracleResult> {
    let k = request.interior_count();
    if k > MAX_INTERIOR || scenario.network.satellite_count() > MAX_SATELLITES || candidates.len() > MAX_CANDIDATES {
        return Err(Error::Intractable(format!(
            "{k} interior VNFs, {} satellites, {} candidates (limits {MAX_INTERIOR}, {MAX_SATELLITES}, {MAX_CANDIDATES})",
            scenario.network.satellite_count(),
            candidates.len()
        )));
    }
    let mut enumerated = 0u64;
    let mut best: Option<((Fixed, Fixed), PlacementStrategy)> = None;
    for candidate in candidates {
        let hosts: Vec<SatelliteId> = match scope {
            HostScope::PathOnly => candidate.path.nodes.clone(),
            HostScope::AllSatellites => scenario.network.satellite_ids().collect(),
        };
        let mut on_this_path: Option<((Fixed, Fixed), PlacementStrategy)> = None;
        let mut tuple = vec![0usize; k];
        loop {
            enumerated += 1;
            if let Some(strategy) = build(scenario, request, candidate, &hosts, &tuple, scope) {
                if state.check_feasible(scenario, request, &strategy).is_ok() {
                    let key = (strategy.delay, strategy_bandwidth(request, &strategy));
                    if on_this_path.as_ref().is_none_or(|(b, _)| key < *b) {
                        on_this_path = Some((key, strategy));
                    }
                }
            }
            if !advance(&mut tuple, hosts.len()) {
                break;
            }
        }
        if let Some((key, strategy)) = on_this_path {
            match scope {
                HostScope::PathOnly => {
                    if best.is_none() {
                        best = Some((key, strategy));
                    }
                }
                HostScope::AllSatellites => {
                    if best.as_ref().is_none_or(|(b, _)| key < *b) {
                        best = Some((key, strategy));
                    }
                }
            }
        }
    }
    let (objective, best) = match best {
        Some((key, strategy)) => (Some(key), Some(strategy)),
        None => (None, None),
    };
    Ok(OracleResult { best, objective, enumerated })
}

/// Odometer over `[0, base)^len`; false once it wraps.
fn advance(tuple: &mut [usize], base: usize) -> bool {
    for digit in tuple.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

fn build(
    scenario: &Scenario,
    request: &UserRequest,
    candidate: &Candidate<'_>,
    hosts: &[SatelliteId],
    tuple: &[usize],
    scope: HostScope,
) -> Option<PlacementStrategy> {
    let network = &scenario.network;
    let mut chosen = vec![candidate.src_access];
    chosen.extend(tuple.iter().map(|&i| hosts[i]));
    chosen.push(candidate.dst_access);
    let routes: Vec<Path> = match scope {
        HostScope::PathOnly => {
            let mut positions = vec![0usize];
            positions.extend(tuple.iter().copied());
            positions.push(candidate.path.nodes.len() - 1);
            if positions.windows(2).any(|w| w[0] > w[1]) {
                return None;
            }
            positions.windows(2).map(|w| candidate.path.sub_path(network, w[0], w[1])).collect()
        }
        HostScope::AllSatellites => {
            let mut routes = Vec::new();
            for w in chosen.windows(2) {
                routes.push(scenario.paths.paths(w[0], w[1]).first()?.clone());
            }
            routes
        }
    };
    let transmission: Fixed =
        routes.iter().map(|r| r.links.iter().map(|&l| network.link(l).delay).sum::<Fixed>()).sum();
    let access = scenario.coverage.access_delay(request.source, candidate.src_access)
        + scenario.coverage.access_delay(request.destination, candidate.dst_access);
    let compute: Fixed = request.vnfs.iter().map(|v| v.compute_time).sum();
    Some(PlacementStrategy {
        request: request.id,
        placement: Placement::Edge(EdgePlacement { hosts: chosen, routes }),
        delay: compute + access + transmission,
    })
}

/// A ledger entry that disagrees with the recount of committed demands.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerMismatch {
    pub element: Element,
    pub ledger: Fixed,
    pub recount: Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Element {
    Node(SatelliteId, Resource),
    Isl(LinkId),
    Ground(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Node(sat, r) => write!(f, "{sat} {r}"),
            Element::Isl(l) => write!(f, "{l}"),
            Element::Ground(i) => write!(f, "ground link {i}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub mismatches: Vec<LedgerMismatch>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.mismatches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len() + self.mismatches.len()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        for m in &self.mismatches {
            writeln!(f, "{}: ledger {} vs recount {}", m.element, m.ledger, m.recount)?;
        }
        Ok(())
    }
}

/// Recounts every demand of `committed` from scratch, checks each
/// strategy's structure and delay, every capacity against the larger of
/// ledger and recount, and that the ledger equals the recount.
pub fn verify_constraints(
    scenario: &Scenario,
    state: &NetworkState,
    committed: &[(&UserRequest, &PlacementStrategy)],
) -> ViolationReport {
    let network = &scenario.network;
    let coverage = &scenario.coverage;
    let mut report = ViolationReport::default();
    let mut recount = Usage::zeros(network);
    let mut seen: BTreeSet<RequestId> = BTreeSet::new();
    let covers = |point, sat: SatelliteId| coverage.neighbouring_satellites(point).is_ok_and(|s| s.contains(&sat));
    let route_ok = |route: &Path, from: SatelliteId, to: SatelliteId| {
        if route.nodes.first() != Some(&from) || route.nodes.last() != Some(&to) {
            return false;
        }
        if route.nodes.len() != route.links.len() + 1 {
            return false;
        }
        let distinct: BTreeSet<_> = route.nodes.iter().collect();
        distinct.len() == route.nodes.len()
            && route.links.iter().zip(route.nodes.windows(2)).all(|(&l, w)| {
                l.0 < network.link_count() && {
                    let link = network.link(l);
                    (link.endpoints == (w[0], w[1])) || (link.endpoints == (w[1], w[0]))
                }
            })
    };
    let route_delay = |route: &Path| route.links.iter().map(|&l| network.link(l).delay).sum::<Fixed>();

    for &(request, strategy) in committed {
        let id = request.id;
        if strategy.request != id || !seen.insert(id) {
            report
                .violations
                .push(Violation::Structure { request: id, reason: "duplicate or mismatched strategy".into() });
            continue;
        }
        let compute: Fixed = request.vnfs.iter().map(|v| v.compute_time).sum();
        let delay = match &strategy.placement {
            Placement::Edge(edge) => {
                if edge.hosts.len() != request.vnfs.len() || edge.routes.len() + 1 != edge.hosts.len() {
                    report.violations.push(Violation::VnfAssignment {
                        request: id,
                        expected: request.vnfs.len(),
                        got: edge.hosts.len(),
                    });
                    continue;
                }
                if !covers(request.source, edge.hosts[0]) {
                    report.violations.push(Violation::AccessSatellite {
                        request: id,
                        side: Side::Source,
                        satellite: edge.hosts[0],
                    });
                }
                let last = *edge.hosts.last().expect("checked length");
                if !covers(request.destination, last) {
                    report.violations.push(Violation::AccessSatellite {
                        request: id,
                        side: Side::Destination,
                        satellite: last,
                    });
                }
                let mut ok = true;
                for (i, route) in edge.routes.iter().enumerate() {
                    if !route_ok(route, edge.hosts[i], edge.hosts[i + 1]) {
                        report.violations.push(Violation::ChainRoute { request: id, edge: i });
                        ok = false;
                    }
                }
                if !ok {
                    continue;
                }
                for i in 1..request.vnfs.len() - 1 {
                    let h = edge.hosts[i].0;
                    recount.cpu[h] += request.vnfs[i].cpu_demand;
                    recount.mem[h] += request.vnfs[i].mem_demand;
                }
                for (route, &bw) in edge.routes.iter().zip(&request.chain_bandwidth) {
                    for &l in &route.links {
                        recount.isl[l.0] += bw;
                    }
                }
                compute
                    + coverage.access_delay(request.source, edge.hosts[0])
                    + edge.routes.iter().map(route_delay).sum::<Fixed>()
                    + coverage.access_delay(request.destination, last)
            }
            Placement::Cloud(cloud) => {
                let Some(dc) = network.cloud() else {
                    report.violations.push(Violation::Structure { request: id, reason: "no data center".into() });
                    continue;
                };
                if request.vnfs.len() < 3 {
                    report.violations.push(Violation::Structure { request: id, reason: "no interior VNF".into() });
                }
                if !covers(request.source, cloud.src_access) {
                    report.violations.push(Violation::AccessSatellite {
                        request: id,
                        side: Side::Source,
                        satellite: cloud.src_access,
                    });
                }
                if !covers(request.destination, cloud.dst_access) {
                    report.violations.push(Violation::AccessSatellite {
                        request: id,
                        side: Side::Destination,
                        satellite: cloud.dst_access,
                    });
                }
                let gw = |sat: SatelliteId| dc.ground_links.iter().position(|g| g.satellite == sat);
                let (Some(up_gw), Some(down_gw)) = (gw(cloud.uplink_gateway), gw(cloud.downlink_gateway)) else {
                    for sat in [cloud.uplink_gateway, cloud.downlink_gateway] {
                        if gw(sat).is_none() {
                            report.violations.push(Violation::CloudAccess { request: id, satellite: sat });
                        }
                    }
                    continue;
                };
                let up_ok = route_ok(&cloud.uplink, cloud.src_access, cloud.uplink_gateway);
                let down_ok = route_ok(&cloud.downlink, cloud.downlink_gateway, cloud.dst_access);
                if !up_ok {
                    report.violations.push(Violation::CloudRoute { request: id, side: Side::Source });
                }
                if !down_ok {
                    report.violations.push(Violation::CloudRoute { request: id, side: Side::Destination });
                }
                if !(up_ok && down_ok) {
                    continue;
                }
                let up = request.chain_bandwidth[0];
                let down = *request.chain_bandwidth.last().expect("non-empty chain");
                for &l in &cloud.uplink.links {
                    recount.isl[l.0] += up;
                }
                for &l in &cloud.downlink.links {
                    recount.isl[l.0] += down;
                }
                recount.ground[up_gw] += up;
                recount.ground[down_gw] += down;
                compute
                    + coverage.access_delay(request.source, cloud.src_access)
                    + route_delay(&cloud.uplink)
                    + dc.ground_links[up_gw].delay
                    + dc.ground_links[down_gw].delay
                    + route_delay(&cloud.downlink)
                    + coverage.access_delay(request.destination, cloud.dst_access)
            }
        };
        if delay > request.max_delay {
            report.violations.push(Violation::DelayBound { request: id, delay, max: request.max_delay });
        }
        if delay != strategy.delay {
            report.violations.push(Violation::Structure {
                request: id,
                reason: format!("recorded delay {} but recomputed {}", strategy.delay, delay),
            });
        }
    }

    let used = state.used();
    let cap = state.capacity();
    for i in 0..network.satellite_count() {
        let sat = SatelliteId(i);
        for (resource, ledger, re, c) in [
            (Resource::Cpu, used.cpu[i], recount.cpu[i], cap.cpu[i]),
            (Resource::Memory, used.mem[i], recount.mem[i], cap.mem[i]),
        ] {
            let worst = ledger.max(re);
            if worst > c {
                report.violations.push(Violation::NodeCapacity {
                    satellite: sat,
                    resource,
                    used: worst,
                    demand: Fixed::ZERO,
                    capacity: c,
                });
            }
            if ledger != re {
                report.mismatches.push(LedgerMismatch { element: Element::Node(sat, resource), ledger, recount: re });
            }
        }
    }
    for i in 0..network.link_count() {
        let worst = used.isl[i].max(recount.isl[i]);
        if worst > cap.isl[i] {
            report.violations.push(Violation::LinkBandwidth {
                link: LinkId(i),
                used: worst,
                demand: Fixed::ZERO,
                capacity: cap.isl[i],
            });
        }
        if used.isl[i] != recount.isl[i] {
            report.mismatches.push(LedgerMismatch {
                element: Element::Isl(LinkId(i)),
                ledger: used.isl[i],
                recount: recount.isl[i],
            });
        }
    }
    for i in 0..cap.ground.len() {
        let worst = used.ground[i].max(recount.ground[i]);
        if worst > cap.ground[i] {
            let satellite = network.cloud().map_or(SatelliteId(usize::MAX), |c| c.ground_links[i].satellite);
            report.violations.push(Violation::GroundBandwidth {
                satellite,
                used: worst,
                demand: Fixed::ZERO,
                capacity: cap.ground[i],
            });
        }
        if used.ground[i] != recount.ground[i] {
            report.mismatches.push(LedgerMismatch {
                element: Element::Ground(i),
                ledger: used.ground[i],
                recount: recount.ground[i],
            });
        }
    }
    report
}

/// A randomized instance small enough for `brute_force_optimal`.
#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub scenario: Scenario,
    pub state: NetworkState,
    pub request: UserRequest,
}

/// Up to six satellites with random link delays, partly consumed
/// capacities and a request of up to four interior VNFs. `d` is the
/// per-pair path count.
pub fn tiny_instance(seed: u64, d: usize) -> TinyInstance {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::requests::Vnf;
    use crate::topology::{attach_cloud, build_constellation, ConstellationParams, CoverageMap};

    const SHAPES: [(usize, usize); 6] = [(1, 2), (1, 4), (1, 6), (2, 2), (2, 3), (3, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (planes, sats_per_plane) = SHAPES[rng.gen_range(0..SHAPES.len())];
    let params = ConstellationParams {
        planes,
        sats_per_plane,
        cpu_capacity: 8.0,
        mem_capacity: 16.0,
        isl_bandwidth: 20.0,
        ..Default::default()
    };
    let mut network = build_constellation(&params);
    for link in &mut network.isl_links {
        link.delay = Fixed::from_f64(rng.gen_range(5.0..15.0f64).round());
    }
    let gateway = SatelliteId(rng.gen_range(0..network.satellite_count()));
    let network = attach_cloud(network, &[gateway], 20.0, 13.1).expect("gateway exists");
    let coverage = CoverageMap::new(&network, 0.3, 0.0, 13.1).expect("valid coverage");
    let scenario = Scenario::new(network, coverage, d);

    let mut state = NetworkState::new(&scenario.network);
    let used = state.used_mut();
    for q in used.cpu.iter_mut() {
        *q = Fixed::from_f64(rng.gen_range(0.0..8.0f64).round());
    }
    for q in used.mem.iter_mut() {
        *q = Fixed::from_f64(rng.gen_range(0.0..16.0f64).round());
    }
    for q in used.isl.iter_mut() {
        *q = Fixed::from_f64(rng.gen_range(0.0..20.0f64).round());
    }

    let interior = rng.gen_range(0..=MAX_INTERIOR);
    let mut vnfs = vec![Vnf::access()];
    for _ in 0..interior {
        vnfs.push(Vnf {
            cpu_demand: Fixed::from_f64(rng.gen_range(1..=3) as f64),
            mem_demand: Fixed::from_f64(rng.gen_range(1..=5) as f64),
            compute_time: Fixed::from_f64(rng.gen_range(20.0..30.0f64)),
        });
    }
    vnfs.push(Vnf::access());
    let chain_bandwidth = (0..vnfs.len() - 1).map(|_| Fixed::from_f64(rng.gen_range(1..=5) as f64)).collect();
    let source = scenario.coverage.sample_covered_point(&mut rng);
    let destination = scenario.coverage.sample_covered_point(&mut rng);
    let request = UserRequest {
        id: seed,
        vnfs,
        chain_bandwidth,
        source,
        destination,
        max_delay: Fixed::from_f64(rng.gen_range(120.0..250.0f64).round()),
        arrival_slot: 0,
        duration: 1,
    };
    TinyInstance { scenario, state, request }
}
