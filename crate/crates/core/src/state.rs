//! Resource ledger, placement strategies, feasibility checks and the cost
//! metrics.
//!
//! All ledger arithmetic is fixed point, so capacity comparisons are exact
//! and `release` undoes `commit` bit for bit.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathing::Path;
use crate::requests::{RequestId, UserRequest};
use crate::scenario::Scenario;
use crate::topology::{CoverageMap, LinkId, SatelliteId, SatelliteNetwork};
use crate::units::Fixed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Cpu,
    Memory,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "cpu",
            Resource::Memory => "memory",
        })
    }
}

/// Per-element quantities over satellites, ISLs and ground links.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub cpu: Vec<Fixed>,
    pub mem: Vec<Fixed>,
    pub isl: Vec<Fixed>,
    /// Indexed like `CloudDataCenter::ground_links`.
    pub ground: Vec<Fixed>,
}

impl Usage {
    pub fn zeros(network: &SatelliteNetwork) -> Self {
        let n = network.satellite_count();
        let ground = network.cloud().map_or(0, |c| c.ground_links.len());
        Usage {
            cpu: vec![Fixed::ZERO; n],
            mem: vec![Fixed::ZERO; n],
            isl: vec![Fixed::ZERO; network.link_count()],
            ground: vec![Fixed::ZERO; ground],
        }
    }

    pub fn capacities(network: &SatelliteNetwork) -> Self {
        Usage {
            cpu: network.satellites.iter().map(|s| s.cpu_capacity).collect(),
            mem: network.satellites.iter().map(|s| s.mem_capacity).collect(),
            isl: network.isl_links.iter().map(|l| l.bandwidth).collect(),
            ground: network.cloud().map_or_else(Vec::new, |c| c.ground_links.iter().map(|g| g.bandwidth).collect()),
        }
    }

    fn apply(&mut self, delta: &Delta, sign: i64) {
        let bump = |v: &mut Vec<Fixed>, entries: &[(usize, Fixed)]| {
            for &(i, q) in entries {
                v[i] = Fixed::from_raw(v[i].raw() + sign * q.raw());
            }
        };
        bump(&mut self.cpu, &delta.cpu);
        bump(&mut self.mem, &delta.mem);
        bump(&mut self.isl, &delta.isl);
        bump(&mut self.ground, &delta.ground);
    }
}

/// Sparse additions to a `Usage`, merged per index and kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Delta {
    pub cpu: Vec<(usize, Fixed)>,
    pub mem: Vec<(usize, Fixed)>,
    pub isl: Vec<(usize, Fixed)>,
    pub ground: Vec<(usize, Fixed)>,
}

fn bump_sparse(entries: &mut Vec<(usize, Fixed)>, index: usize, amount: Fixed) {
    match entries.binary_search_by_key(&index, |&(i, _)| i) {
        Ok(pos) => entries[pos].1 += amount,
        Err(pos) => entries.insert(pos, (index, amount)),
    }
}

fn sparse_get(entries: &[(usize, Fixed)], index: usize) -> Fixed {
    entries.binary_search_by_key(&index, |&(i, _)| i).map_or(Fixed::ZERO, |pos| entries[pos].1)
}

impl Delta {
    pub fn add_node(&mut self, sat: SatelliteId, cpu: Fixed, mem: Fixed) {
        if cpu != Fixed::ZERO {
            bump_sparse(&mut self.cpu, sat.0, cpu);
        }
        if mem != Fixed::ZERO {
            bump_sparse(&mut self.mem, sat.0, mem);
        }
    }

    pub fn add_links(&mut self, links: &[LinkId], bandwidth: Fixed) {
        if bandwidth == Fixed::ZERO {
            return;
        }
        for &l in links {
            bump_sparse(&mut self.isl, l.0, bandwidth);
        }
    }

    pub fn add_ground(&mut self, index: usize, bandwidth: Fixed) {
        if bandwidth != Fixed::ZERO {
            bump_sparse(&mut self.ground, index, bandwidth);
        }
    }

    pub fn cpu_at(&self, sat: SatelliteId) -> Fixed {
        sparse_get(&self.cpu, sat.0)
    }

    pub fn mem_at(&self, sat: SatelliteId) -> Fixed {
        sparse_get(&self.mem, sat.0)
    }

    pub fn isl_at(&self, link: LinkId) -> Fixed {
        sparse_get(&self.isl, link.0)
    }

    pub fn ground_at(&self, index: usize) -> Fixed {
        sparse_get(&self.ground, index)
    }

    /// Bandwidth summed over ISLs (Mbps times links).
    pub fn isl_total(&self) -> Fixed {
        self.isl.iter().map(|&(_, q)| q).sum()
    }

    pub fn merge(&mut self, other: &Delta) {
        for &(i, q) in &other.cpu {
            bump_sparse(&mut self.cpu, i, q);
        }
        for &(i, q) in &other.mem {
            bump_sparse(&mut self.mem, i, q);
        }
        for &(i, q) in &other.isl {
            bump_sparse(&mut self.isl, i, q);
        }
        for &(i, q) in &other.ground {
            bump_sparse(&mut self.ground, i, q);
        }
    }
}

/// Which end of a request an access choice belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Destination,
}

/// VNFs hosted on satellites. `hosts[i]` runs `vnfs[i]`; the first and last
/// entries are the access satellites. `routes[i]` carries chain edge `i`
/// and is the empty path when both ends share a satellite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgePlacement {
    pub hosts: Vec<SatelliteId>,
    pub routes: Vec<Path>,
}

impl EdgePlacement {
    pub fn src_access(&self) -> SatelliteId {
        self.hosts[0]
    }

    pub fn dst_access(&self) -> SatelliteId {
        *self.hosts.last().expect("at least two hosts")
    }
}

/// Interior VNFs run in the data center; the satellite network only routes
/// the first chain edge up and the last chain edge back down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPlacement {
    pub src_access: SatelliteId,
    pub dst_access: SatelliteId,
    pub uplink_gateway: SatelliteId,
    pub downlink_gateway: SatelliteId,
    /// `src_access` to `uplink_gateway`.
    pub uplink: Path,
    /// `downlink_gateway` to `dst_access`.
    pub downlink: Path,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Placement {
    Edge(EdgePlacement),
    Cloud(CloudPlacement),
}

/// A deployment decision for one request. Requests that run locally have no
/// strategy at all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementStrategy {
    pub request: RequestId,
    pub placement: Placement,
    /// Realized end-to-end delay, ms.
    pub delay: Fixed,
}

impl PlacementStrategy {
    pub fn is_edge(&self) -> bool {
        matches!(self.placement, Placement::Edge(_))
    }

    pub fn is_cloud(&self) -> bool {
        matches!(self.placement, Placement::Cloud(_))
    }

    pub fn routes(&self) -> Vec<&Path> {
        match &self.placement {
            Placement::Edge(e) => e.routes.iter().collect(),
            Placement::Cloud(c) => vec![&c.uplink, &c.downlink],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    AccessSatellite,
    VnfAssignment,
    ChainRoute,
    NodeCapacity,
    LinkBandwidth,
    CloudAccess,
    CloudRoute,
    GroundBandwidth,
    DelayBound,
    Structure,
}

/// A violated placement constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The access satellite does not cover the request's endpoint.
    AccessSatellite {
        request: RequestId,
        side: Side,
        satellite: SatelliteId,
    },
    /// Host list does not assign exactly one server per VNF.
    VnfAssignment {
        request: RequestId,
        expected: usize,
        got: usize,
    },
    /// A chain edge is not carried by exactly one valid route between its hosts.
    ChainRoute {
        request: RequestId,
        edge: usize,
    },
    NodeCapacity {
        satellite: SatelliteId,
        resource: Resource,
        used: Fixed,
        demand: Fixed,
        capacity: Fixed,
    },
    LinkBandwidth {
        link: LinkId,
        used: Fixed,
        demand: Fixed,
        capacity: Fixed,
    },
    /// The gateway satellite does not cover the data center.
    CloudAccess {
        request: RequestId,
        satellite: SatelliteId,
    },
    /// A cloud leg route does not join its access satellite and gateway.
    CloudRoute {
        request: RequestId,
        side: Side,
    },
    GroundBandwidth {
        satellite: SatelliteId,
        used: Fixed,
        demand: Fixed,
        capacity: Fixed,
    },
    DelayBound {
        request: RequestId,
        delay: Fixed,
        max: Fixed,
    },
    /// Anything else that makes the strategy meaningless for this request.
    Structure {
        request: RequestId,
        reason: String,
    },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::AccessSatellite { .. } => ViolationKind::AccessSatellite,
            Violation::VnfAssignment { .. } => ViolationKind::VnfAssignment,
            Violation::ChainRoute { .. } => ViolationKind::ChainRoute,
            Violation::NodeCapacity { .. } => ViolationKind::NodeCapacity,
            Violation::LinkBandwidth { .. } => ViolationKind::LinkBandwidth,
            Violation::CloudAccess { .. } => ViolationKind::CloudAccess,
            Violation::CloudRoute { .. } => ViolationKind::CloudRoute,
            Violation::GroundBandwidth { .. } => ViolationKind::GroundBandwidth,
            Violation::DelayBound { .. } => ViolationKind::DelayBound,
            Violation::Structure { .. } => ViolationKind::Structure,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AccessSatellite { request, side, satellite } => {
                write!(f, "request {request}: {satellite} does not cover the {side:?} endpoint")
            }
            Violation::VnfAssignment { request, expected, got } => {
                write!(f, "request {request}: {got} hosts for {expected} VNFs")
            }
            Violation::ChainRoute { request, edge } => {
                write!(f, "request {request}: chain edge {edge} has no valid route")
            }
            Violation::NodeCapacity { satellite, resource, used, demand, capacity } => {
                write!(f, "{satellite} {resource}: {used} used + {demand} demanded > {capacity}")
            }
            Violation::LinkBandwidth { link, used, demand, capacity } => {
                write!(f, "{link}: {used} used + {demand} demanded > {capacity} Mbps")
            }
            Violation::CloudAccess { request, satellite } => {
                write!(f, "request {request}: {satellite} does not cover the data center")
            }
            Violation::CloudRoute { request, side } => write!(f, "request {request}: invalid {side:?} cloud leg"),
            Violation::GroundBandwidth { satellite, used, demand, capacity } => {
                write!(f, "ground link at {satellite}: {used} used + {demand} demanded > {capacity} Mbps")
            }
            Violation::DelayBound { request, delay, max } => {
                write!(f, "request {request}: delay {delay} ms > {max} ms")
            }
            Violation::Structure { request, reason } => write!(f, "request {request}: {reason}"),
        }
    }
}

/// Capacities and committed usage of the satellite network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkState {
    capacity: Arc<Usage>,
    used: Usage,
    committed: BTreeSet<RequestId>,
}

impl NetworkState {
    pub fn new(network: &SatelliteNetwork) -> Self {
        NetworkState {
            capacity: Arc::new(Usage::capacities(network)),
            used: Usage::zeros(network),
            committed: BTreeSet::new(),
        }
    }

    pub fn used(&self) -> &Usage {
        &self.used
    }

    pub fn capacity(&self) -> &Usage {
        &self.capacity
    }

    pub fn is_committed(&self, request: RequestId) -> bool {
        self.committed.contains(&request)
    }

    pub fn committed_count(&self) -> usize {
        self.committed.len()
    }

    /// Writable view of the usage counters, bypassing every check. Meant
    /// for pre-loading background traffic and for fault injection in tests.
    pub fn used_mut(&mut self) -> &mut Usage {
        &mut self.used
    }

    pub fn free_cpu(&self, sat: SatelliteId) -> Fixed {
        self.capacity.cpu[sat.0] - self.used.cpu[sat.0]
    }

    pub fn free_mem(&self, sat: SatelliteId) -> Fixed {
        self.capacity.mem[sat.0] - self.used.mem[sat.0]
    }

    pub fn free_isl(&self, link: LinkId) -> Fixed {
        self.capacity.isl[link.0] - self.used.isl[link.0]
    }

    pub fn free_ground(&self, index: usize) -> Fixed {
        self.capacity.ground[index] - self.used.ground[index]
    }

    /// Capacity violations `delta` would cause on top of the current usage.
    pub fn capacity_violations(&self, network: &SatelliteNetwork, delta: &Delta) -> Vec<Violation> {
        let mut out = Vec::new();
        for (resource, entries, used, cap) in [
            (Resource::Cpu, &delta.cpu, &self.used.cpu, &self.capacity.cpu),
            (Resource::Memory, &delta.mem, &self.used.mem, &self.capacity.mem),
        ] {
            for &(i, demand) in entries {
                if used[i] + demand > cap[i] {
                    out.push(Violation::NodeCapacity {
                        satellite: SatelliteId(i),
                        resource,
                        used: used[i],
                        demand,
                        capacity: cap[i],
                    });
                }
            }
        }
        for &(i, demand) in &delta.isl {
            if self.used.isl[i] + demand > self.capacity.isl[i] {
                out.push(Violation::LinkBandwidth {
                    link: LinkId(i),
                    used: self.used.isl[i],
                    demand,
                    capacity: self.capacity.isl[i],
                });
            }
        }
        for &(i, demand) in &delta.ground {
            if self.used.ground[i] + demand > self.capacity.ground[i] {
                let satellite = network.cloud().map_or(SatelliteId(usize::MAX), |c| c.ground_links[i].satellite);
                out.push(Violation::GroundBandwidth {
                    satellite,
                    used: self.used.ground[i],
                    demand,
                    capacity: self.capacity.ground[i],
                });
            }
        }
        out
    }

    /// Checks access structure, routes, every capacity and the delay bound.
    /// Returns every violated constraint.
    pub fn check_feasible(
        &self,
        scenario: &Scenario,
        request: &UserRequest,
        strategy: &PlacementStrategy,
    ) -> std::result::Result<(), Vec<Violation>> {
        let mut violations = structural_violations(scenario, request, strategy);
        if violations.is_empty() {
            let delta = demand_of(&scenario.network, request, strategy);
            violations.extend(self.capacity_violations(&scenario.network, &delta));
            let delay = end_to_end_delay(request, &strategy.placement, &scenario.coverage, &scenario.network);
            if delay > request.max_delay {
                violations.push(Violation::DelayBound { request: request.id, delay, max: request.max_delay });
            }
            if delay != strategy.delay {
                violations.push(Violation::Structure {
                    request: request.id,
                    reason: format!("recorded delay {} differs from realized {}", strategy.delay, delay),
                });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Adds the strategy's demands after re-checking feasibility against
    /// this state.
    pub fn commit(&mut self, scenario: &Scenario, request: &UserRequest, strategy: &PlacementStrategy) -> Result<()> {
        if self.committed.contains(&request.id) {
            return Err(Error::AlreadyCommitted(request.id));
        }
        if strategy.request != request.id || self.check_feasible(scenario, request, strategy).is_err() {
            return Err(Error::Infeasible(request.id));
        }
        let delta = demand_of(&scenario.network, request, strategy);
        self.used.apply(&delta, 1);
        self.committed.insert(request.id);
        Ok(())
    }

    /// Subtracts exactly what `commit` added.
    pub fn release(&mut self, scenario: &Scenario, request: &UserRequest, strategy: &PlacementStrategy) -> Result<()> {
        if !self.committed.remove(&request.id) {
            return Err(Error::NotCommitted(request.id));
        }
        let delta = demand_of(&scenario.network, request, strategy);
        self.used.apply(&delta, -1);
        Ok(())
    }
}

/// Resources a strategy consumes. Edge placements charge each interior VNF
/// to its host and each chain edge's bandwidth to every link of its route;
/// cloud placements charge only the first and last chain edges along the
/// two legs and the ground links.
pub fn demand_of(network: &SatelliteNetwork, request: &UserRequest, strategy: &PlacementStrategy) -> Delta {
    let mut delta = Delta::default();
    match &strategy.placement {
        Placement::Edge(edge) => {
            for i in request.interior() {
                let vnf = &request.vnfs[i];
                delta.add_node(edge.hosts[i], vnf.cpu_demand, vnf.mem_demand);
            }
            for (route, &bw) in edge.routes.iter().zip(&request.chain_bandwidth) {
                delta.add_links(&route.links, bw);
            }
        }
        Placement::Cloud(cloud) => {
            let up = request.uplink_bandwidth();
            let down = request.downlink_bandwidth();
            delta.add_links(&cloud.uplink.links, up);
            delta.add_links(&cloud.downlink.links, down);
            if let Some(dc) = network.cloud() {
                if let Some(i) = dc.ground_link_index(cloud.uplink_gateway) {
                    delta.add_ground(i, up);
                }
                if let Some(i) = dc.ground_link_index(cloud.downlink_gateway) {
                    delta.add_ground(i, down);
                }
            }
        }
    }
    delta
}

/// ISL bandwidth a strategy occupies summed over links, Mbps.
pub fn strategy_bandwidth(request: &UserRequest, strategy: &PlacementStrategy) -> Fixed {
    match &strategy.placement {
        Placement::Edge(edge) => {
            edge.routes.iter().zip(&request.chain_bandwidth).map(|(route, &bw)| bw.times(route.hops())).sum()
        }
        Placement::Cloud(cloud) => {
            request.uplink_bandwidth().times(cloud.uplink.hops())
                + request.downlink_bandwidth().times(cloud.downlink.hops())
        }
    }
}

fn structural_violations(scenario: &Scenario, request: &UserRequest, strategy: &PlacementStrategy) -> Vec<Violation> {
    let network = &scenario.network;
    let coverage = &scenario.coverage;
    let id = request.id;
    let mut out = Vec::new();
    if strategy.request != id {
        out.push(Violation::Structure {
            request: id,
            reason: format!("strategy belongs to request {}", strategy.request),
        });
        return out;
    }
    let covers =
        |point, sat: SatelliteId| coverage.neighbouring_satellites(point).map(|s| s.contains(&sat)).unwrap_or(false);
    match &strategy.placement {
        Placement::Edge(edge) => {
            if edge.hosts.len() != request.vnfs.len() || edge.hosts.len() < 2 {
                out.push(Violation::VnfAssignment { request: id, expected: request.vnfs.len(), got: edge.hosts.len() });
                return out;
            }
            if edge.hosts.iter().any(|&h| !network.contains(h)) {
                out.push(Violation::Structure { request: id, reason: "host outside the network".into() });
                return out;
            }
            if !covers(request.source, edge.src_access()) {
                out.push(Violation::AccessSatellite { request: id, side: Side::Source, satellite: edge.src_access() });
            }
            if !covers(request.destination, edge.dst_access()) {
                out.push(Violation::AccessSatellite {
                    request: id,
                    side: Side::Destination,
                    satellite: edge.dst_access(),
                });
            }
            if edge.routes.len() != request.chain_bandwidth.len() {
                out.push(Violation::ChainRoute {
                    request: id,
                    edge: edge.routes.len().min(request.chain_bandwidth.len()),
                });
                return out;
            }
            for (i, route) in edge.routes.iter().enumerate() {
                let ok = route.is_valid_in(network)
                    && route.source() == edge.hosts[i]
                    && route.target() == edge.hosts[i + 1];
                if !ok {
                    out.push(Violation::ChainRoute { request: id, edge: i });
                }
            }
        }
        Placement::Cloud(cloud) => {
            let Some(dc) = network.cloud() else {
                out.push(Violation::Structure { request: id, reason: "no data center attached".into() });
                return out;
            };
            if request.interior_count() == 0 {
                out.push(Violation::Structure { request: id, reason: "no interior VNF to offload".into() });
            }
            if !covers(request.source, cloud.src_access) {
                out.push(Violation::AccessSatellite { request: id, side: Side::Source, satellite: cloud.src_access });
            }
            if !covers(request.destination, cloud.dst_access) {
                out.push(Violation::AccessSatellite {
                    request: id,
                    side: Side::Destination,
                    satellite: cloud.dst_access,
                });
            }
            for gw in [cloud.uplink_gateway, cloud.downlink_gateway] {
                if dc.ground_link_index(gw).is_none() {
                    out.push(Violation::CloudAccess { request: id, satellite: gw });
                }
            }
            let up_ok = cloud.uplink.is_valid_in(network)
                && cloud.uplink.source() == cloud.src_access
                && cloud.uplink.target() == cloud.uplink_gateway;
            if !up_ok {
                out.push(Violation::CloudRoute { request: id, side: Side::Source });
            }
            let down_ok = cloud.downlink.is_valid_in(network)
                && cloud.downlink.source() == cloud.downlink_gateway
                && cloud.downlink.target() == cloud.dst_access;
            if !down_ok {
                out.push(Violation::CloudRoute { request: id, side: Side::Destination });
            }
        }
    }
    out
}

/// Compute time plus transmission delay of a placement, ms. The data center
/// adds no internal delay.
pub fn end_to_end_delay(
    request: &UserRequest,
    placement: &Placement,
    coverage: &CoverageMap,
    network: &SatelliteNetwork,
) -> Fixed {
    let compute = request.compute_delay();
    match placement {
        Placement::Edge(edge) => {
            compute
                + coverage.access_delay(request.source, edge.src_access())
                + edge.routes.iter().map(|r| r.delay).sum::<Fixed>()
                + coverage.access_delay(request.destination, edge.dst_access())
        }
        Placement::Cloud(cloud) => {
            let ground = |sat: SatelliteId| {
                network
                    .cloud()
                    .and_then(|c| c.ground_link_index(sat).map(|i| c.ground_links[i].delay))
                    .unwrap_or(Fixed::ZERO)
            };
            compute
                + coverage.access_delay(request.source, cloud.src_access)
                + cloud.uplink.delay
                + ground(cloud.uplink_gateway)
                + ground(cloud.downlink_gateway)
                + cloud.downlink.delay
                + coverage.access_delay(request.destination, cloud.dst_access)
        }
    }
}

/// Mean used bandwidth over all ISLs, Mbps. Ground links are excluded.
pub fn bandwidth_cost(state: &NetworkState) -> f64 {
    let isl = &state.used().isl;
    if isl.is_empty() {
        return 0.0;
    }
    isl.iter().sum::<Fixed>().to_f64() / isl.len() as f64
}

/// Mean end-to-end delay over deployed requests, ms; `None` entries are
/// requests executed locally. Zero when nothing was deployed.
pub fn user_delay_cost<'a, I>(strategies: I) -> f64
where
    I: IntoIterator<Item = Option<&'a PlacementStrategy>>,
{
    let (sum, n) = strategies.into_iter().flatten().fold((Fixed::ZERO, 0usize), |(s, n), st| (s + st.delay, n + 1));
    if n == 0 {
        0.0
    } else {
        sum.to_f64() / n as f64
    }
}

/// Aggregate outcome of placing one batch of requests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Mbps.
    pub bandwidth_cost: f64,
    /// ms.
    pub user_delay_cost: f64,
    pub allocated_fraction: f64,
    pub requests: usize,
    pub edge_count: usize,
    pub cloud_count: usize,
    pub local_count: usize,
    pub rounds: usize,
    pub solver_calls: usize,
    /// Set when no request was deployed and the delay cost is the zero convention.
    pub none_deployed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::requests::Vnf;
    use crate::topology::{attach_cloud, build_constellation, ConstellationParams, GroundPoint};

    fn vnf(cpu: f64, mem: f64, t: f64) -> Vnf {
        Vnf { cpu_demand: Fixed::from_f64(cpu), mem_demand: Fixed::from_f64(mem), compute_time: Fixed::from_f64(t) }
    }

    fn request(id: RequestId, interior: Vec<Vnf>, bw: f64, at: GroundPoint, to: GroundPoint) -> UserRequest {
        let mut vnfs = vec![Vnf::access()];
        vnfs.extend(interior);
        vnfs.push(Vnf::access());
        let edges = vnfs.len() - 1;
        UserRequest {
            id,
            vnfs,
            chain_bandwidth: vec![Fixed::from_f64(bw); edges],
            source: at,
            destination: to,
            max_delay: Fixed::from_f64(250.0),
            arrival_slot: 0,
            duration: 1,
        }
    }

    fn zero_overlap_reference() -> Scenario {
        let net = build_constellation(&ConstellationParams::default());
        let net = attach_cloud(net, &[SatelliteId(5), SatelliteId(6)], 10_000.0, 13.1).unwrap();
        let cov = CoverageMap::new(&net, 0.0, 0.0, 13.1).unwrap();
        Scenario::new(net, cov, 8)
    }

    /// Centre of the cell of `sat` in the reference 3x4 grid.
    fn centre(sat: usize) -> GroundPoint {
        GroundPoint::new((sat % 4) as f64 + 0.5, (sat / 4) as f64 + 0.5)
    }

    fn edge_strategy(sc: &Scenario, req: &UserRequest, hosts: Vec<usize>) -> PlacementStrategy {
        let hosts: Vec<SatelliteId> = hosts.into_iter().map(SatelliteId).collect();
        let routes = hosts.windows(2).map(|w| sc.paths.paths(w[0], w[1])[0].clone()).collect();
        let placement = Placement::Edge(EdgePlacement { hosts, routes });
        let delay = end_to_end_delay(req, &placement, &sc.coverage, &sc.network);
        PlacementStrategy { request: req.id, placement, delay }
    }

    #[test]
    fn fresh_state_has_zero_costs() {
        let sc = zero_overlap_reference();
        let state = NetworkState::new(&sc.network);
        assert_eq!(bandwidth_cost(&state), 0.0);
        assert_eq!(user_delay_cost(std::iter::empty()), 0.0);
    }

    #[test]
    fn node_capacity_violation() {
        let sc = zero_overlap_reference();
        let state = NetworkState::new(&sc.network);
        let req = request(1, vec![vnf(97.0, 1.0, 20.0)], 1.0, centre(0), centre(0));
        let st = edge_strategy(&sc, &req, vec![0, 0, 0]);
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::NodeCapacity { resource: Resource::Cpu, .. }));
    }

    #[test]
    fn link_bandwidth_violation_reports_all() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        let link = sc.network.link_between(SatelliteId(0), SatelliteId(1)).unwrap();
        state.used_mut().isl[link.0] = Fixed::from_f64(999.0);
        // 999 + 3 > 1000 on the one link, and 97 vCPUs on sat0.
        let req = request(2, vec![vnf(97.0, 1.0, 20.0)], 3.0, centre(0), centre(1));
        let st = edge_strategy(&sc, &req, vec![0, 0, 1]);
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        let kinds: Vec<_> = v.iter().map(Violation::kind).collect();
        assert_eq!(kinds, vec![ViolationKind::NodeCapacity, ViolationKind::LinkBandwidth]);
        if let Violation::LinkBandwidth { used, demand, capacity, .. } = &v[1] {
            assert_eq!((*used + *demand).to_f64(), 1002.0);
            assert_eq!(capacity.to_f64(), 1000.0);
        }
        // The same traffic at 997 used fits exactly.
        state.used_mut().isl[link.0] = Fixed::from_f64(997.0);
        let req = request(3, vec![vnf(1.0, 1.0, 20.0)], 3.0, centre(0), centre(1));
        let st = edge_strategy(&sc, &req, vec![0, 0, 1]);
        assert!(state.check_feasible(&sc, &req, &st).is_ok());
    }

    #[test]
    fn structural_violations_detected() {
        let sc = zero_overlap_reference();
        let state = NetworkState::new(&sc.network);
        let req = request(4, vec![vnf(1.0, 1.0, 20.0)], 1.0, centre(0), centre(0));
        // Access satellite that does not cover the source.
        let st = edge_strategy(&sc, &req, vec![3, 3, 0]);
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert!(v.iter().any(|v| v.kind() == ViolationKind::AccessSatellite));
        // Wrong host count.
        let mut st = edge_strategy(&sc, &req, vec![0, 0, 0]);
        if let Placement::Edge(e) = &mut st.placement {
            e.hosts.pop();
        }
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert_eq!(v[0].kind(), ViolationKind::VnfAssignment);
        // Route that does not join its hosts.
        let mut st = edge_strategy(&sc, &req, vec![0, 0, 0]);
        if let Placement::Edge(e) = &mut st.placement {
            e.routes[1] = Path::empty(SatelliteId(2));
        }
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert_eq!(v[0].kind(), ViolationKind::ChainRoute);
    }

    #[test]
    fn delay_on_one_satellite() {
        let sc = zero_overlap_reference();
        let req = request(5, vec![vnf(1.0, 2.0, 20.0), vnf(1.0, 2.0, 25.0)], 1.0, centre(0), centre(0));
        let st = edge_strategy(&sc, &req, vec![0, 0, 0, 0]);
        assert_eq!(st.delay.to_f64(), 71.2);
    }

    #[test]
    fn delay_via_cloud_from_gateway_cell() {
        let sc = zero_overlap_reference();
        let req = request(6, vec![vnf(1.0, 2.0, 20.0), vnf(1.0, 2.0, 25.0)], 1.0, centre(5), centre(5));
        let gw = SatelliteId(5);
        let placement = Placement::Cloud(CloudPlacement {
            src_access: gw,
            dst_access: gw,
            uplink_gateway: gw,
            downlink_gateway: gw,
            uplink: Path::empty(gw),
            downlink: Path::empty(gw),
        });
        let delay = end_to_end_delay(&req, &placement, &sc.coverage, &sc.network);
        assert_eq!(delay, Fixed::from_f64(45.0 + 4.0 * 13.1));
        assert_eq!(delay.to_f64(), 97.4);
    }

    #[test]
    fn access_only_chain_delay() {
        let sc = zero_overlap_reference();
        let req = request(7, vec![], 2.0, centre(3), centre(3));
        let st = edge_strategy(&sc, &req, vec![3, 3]);
        assert_eq!(st.delay, Fixed::from_f64(26.2));
    }

    #[test]
    fn commit_release_restores_state() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        let original = state.clone();
        let req = request(8, vec![vnf(1.5, 3.3, 22.0), vnf(1.2, 2.1, 21.0)], 3.0, centre(0), centre(2));
        let st = edge_strategy(&sc, &req, vec![0, 0, 1, 2]);
        state.commit(&sc, &req, &st).unwrap();
        assert_ne!(state, original);
        assert!(matches!(state.commit(&sc, &req, &st), Err(Error::AlreadyCommitted(8))));
        state.release(&sc, &req, &st).unwrap();
        assert_eq!(state, original);
        assert!(matches!(state.release(&sc, &req, &st), Err(Error::NotCommitted(8))));
    }

    #[test]
    fn commit_charges_every_route_link() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        // One 3 Mbps edge over the two-hop route sat0 -> sat2.
        let req = request(9, vec![vnf(1.0, 2.0, 20.0)], 3.0, centre(0), centre(2));
        let mut st = edge_strategy(&sc, &req, vec![0, 0, 2]);
        if let Placement::Edge(e) = &mut st.placement {
            e.routes[0] = Path::empty(SatelliteId(0));
            e.routes[1] = Path::from_nodes(&sc.network, &[SatelliteId(0), SatelliteId(1), SatelliteId(2)]).unwrap();
        }
        st.delay = end_to_end_delay(&req, &st.placement, &sc.coverage, &sc.network);
        state.commit(&sc, &req, &st).unwrap();
        let l01 = sc.network.link_between(SatelliteId(0), SatelliteId(1)).unwrap();
        let l12 = sc.network.link_between(SatelliteId(1), SatelliteId(2)).unwrap();
        assert_eq!(state.used().isl[l01.0], Fixed::from_f64(3.0));
        assert_eq!(state.used().isl[l12.0], Fixed::from_f64(3.0));
        assert_eq!(state.used().isl.iter().filter(|q| q.is_positive()).count(), 2);
        // 6 Mbps spread over 24 links.
        assert_eq!(bandwidth_cost(&state), 0.25);
    }

    #[test]
    fn cloud_commit_charges_only_outer_edges() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        let mut req = request(10, vec![vnf(1.0, 2.0, 20.0), vnf(1.0, 2.0, 20.0)], 0.0, centre(4), centre(4));
        req.chain_bandwidth = vec![Fixed::from_f64(2.0), Fixed::from_f64(5.0), Fixed::from_f64(4.0)];
        let gw = SatelliteId(5);
        let src = SatelliteId(4);
        let uplink = sc.paths.paths(src, gw)[0].clone();
        let downlink = sc.paths.paths(gw, src)[0].clone();
        assert_eq!(uplink.hops(), 1);
        let placement = Placement::Cloud(CloudPlacement {
            src_access: src,
            dst_access: src,
            uplink_gateway: gw,
            downlink_gateway: gw,
            uplink,
            downlink,
        });
        let delay = end_to_end_delay(&req, &placement, &sc.coverage, &sc.network);
        let st = PlacementStrategy { request: req.id, placement, delay };
        state.commit(&sc, &req, &st).unwrap();
        let link = sc.network.link_between(src, gw).unwrap();
        // Uplink carries the first edge (2), downlink the last (4); the 5 Mbps interior edge stays in the cloud.
        assert_eq!(state.used().isl[link.0], Fixed::from_f64(6.0));
        assert_eq!(state.used().isl.iter().sum::<Fixed>(), Fixed::from_f64(6.0));
        assert_eq!(state.used().ground[0], Fixed::from_f64(6.0));
        assert!(state.used().cpu.iter().all(|q| *q == Fixed::ZERO));
    }

    #[test]
    fn cloud_ground_saturation() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        state.used_mut().ground[0] = Fixed::from_f64(10_000.0);
        let req = request(11, vec![vnf(1.0, 2.0, 20.0)], 1.0, centre(5), centre(5));
        let gw = SatelliteId(5);
        let placement = Placement::Cloud(CloudPlacement {
            src_access: gw,
            dst_access: gw,
            uplink_gateway: gw,
            downlink_gateway: gw,
            uplink: Path::empty(gw),
            downlink: Path::empty(gw),
        });
        let delay = end_to_end_delay(&req, &placement, &sc.coverage, &sc.network);
        let st = PlacementStrategy { request: req.id, placement, delay };
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind(), ViolationKind::GroundBandwidth);
    }

    #[test]
    fn preloaded_constant_bandwidth() {
        let sc = zero_overlap_reference();
        let mut state = NetworkState::new(&sc.network);
        for q in state.used_mut().isl.iter_mut() {
            *q = Fixed::from_f64(10.0);
        }
        assert_eq!(bandwidth_cost(&state), 10.0);
    }

    #[test]
    fn delay_cost_means() {
        let mk = |d: f64| PlacementStrategy {
            request: 0,
            placement: Placement::Edge(EdgePlacement { hosts: vec![], routes: vec![] }),
            delay: Fixed::from_f64(d),
        };
        let (a, b) = (mk(70.0), mk(80.0));
        assert_eq!(user_delay_cost([Some(&a), Some(&b)]), 75.0);
        let c = mk(71.2);
        assert_eq!(user_delay_cost([Some(&c), None]), 71.2);
        assert_eq!(user_delay_cost([None, None]), 0.0);
    }

    #[test]
    fn delay_bound_violation() {
        let sc = zero_overlap_reference();
        let state = NetworkState::new(&sc.network);
        let mut req = request(12, vec![vnf(1.0, 2.0, 30.0)], 1.0, centre(0), centre(0));
        req.max_delay = Fixed::from_f64(50.0);
        let st = edge_strategy(&sc, &req, vec![0, 0, 0]);
        let v = state.check_feasible(&sc, &req, &st).unwrap_err();
        assert_eq!(v.iter().map(Violation::kind).collect::<Vec<_>>(), vec![ViolationKind::DelayBound]);
    }
}
