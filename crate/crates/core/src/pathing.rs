//! Loopless k-shortest delay paths between satellites, precomputed once per
//! network, and the per-request candidate lists built on top of them.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::requests::UserRequest;
use crate::topology::{CoverageMap, LinkId, SatelliteId, SatelliteNetwork};
use crate::units::Fixed;

/// A simple path. `nodes.len() == links.len() + 1`; the empty path of a
/// satellite to itself has one node and no links.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<SatelliteId>,
    pub links: Vec<LinkId>,
    /// ms, the exact sum of member link delays.
    pub delay: Fixed,
}

impl Path {
    pub fn empty(at: SatelliteId) -> Self {
        Path { nodes: vec![at], links: Vec::new(), delay: Fixed::ZERO }
    }

    /// Builds a path from a node walk, looking up each link.
    pub fn from_nodes(network: &SatelliteNetwork, nodes: &[SatelliteId]) -> Option<Self> {
        nodes.first()?;
        let mut links = Vec::with_capacity(nodes.len().saturating_sub(1));
        for pair in nodes.windows(2) {
            links.push(network.link_between(pair[0], pair[1])?);
        }
        let delay = links.iter().map(|&l| network.link(l).delay).sum();
        Some(Path { nodes: nodes.to_vec(), links, delay })
    }

    pub fn source(&self) -> SatelliteId {
        self.nodes[0]
    }

    pub fn target(&self) -> SatelliteId {
        *self.nodes.last().expect("paths have at least one node")
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// The stretch between node positions `from` and `to` (inclusive, `from <= to`).
    pub fn sub_path(&self, network: &SatelliteNetwork, from: usize, to: usize) -> Path {
        debug_assert!(from <= to && to < self.nodes.len());
        let links = self.links[from..to].to_vec();
        let delay = links.iter().map(|&l| network.link(l).delay).sum();
        Path { nodes: self.nodes[from..=to].to_vec(), links, delay }
    }

    /// True when the walk is simple, every link joins consecutive nodes and
    /// the stored delay matches the link delays.
    pub fn is_valid_in(&self, network: &SatelliteNetwork) -> bool {
        if self.nodes.is_empty() || self.nodes.len() != self.links.len() + 1 {
            return false;
        }
        if !self.nodes.iter().all(|&n| network.contains(n)) {
            return false;
        }
        let distinct: HashSet<_> = self.nodes.iter().collect();
        if distinct.len() != self.nodes.len() {
            return false;
        }
        for (i, &l) in self.links.iter().enumerate() {
            if l.0 >= network.link_count() {
                return false;
            }
            let link = network.link(l);
            if !(link.touches(self.nodes[i]) && link.other(self.nodes[i]) == self.nodes[i + 1]) {
                return false;
            }
        }
        self.delay == self.links.iter().map(|&l| network.link(l).delay).sum::<Fixed>()
    }
}

/// Minimum-delay path from `src` to `dst` avoiding the given nodes and links.
/// Among equal-delay paths the one with the lexicographically smallest link
/// sequence is returned.
fn shortest_path(
    network: &SatelliteNetwork,
    src: SatelliteId,
    dst: SatelliteId,
    blocked_nodes: &[bool],
    blocked_links: &HashSet<LinkId>,
) -> Option<Path> {
    if src == dst {
        return Some(Path::empty(src));
    }
    // Distances to `dst`; the graph is undirected.
    let n = network.satellite_count();
    let mut dist: Vec<Option<Fixed>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[dst.0] = Some(Fixed::ZERO);
    heap.push(Reverse((Fixed::ZERO, dst)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u.0].is_some_and(|best| d > best) {
            continue;
        }
        for &(v, link) in network.neighbours(u) {
            if blocked_nodes[v.0] || blocked_links.contains(&link) {
                continue;
            }
            let nd = d + network.link(link).delay;
            if dist[v.0].is_none_or(|cur| nd < cur) {
                dist[v.0] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    let total = dist[src.0]?;

    let mut nodes = vec![src];
    let mut links = Vec::new();
    let mut at = src;
    while at != dst {
        let here = dist[at.0].expect("on a shortest path");
        let (next, link) = network
            .neighbours(at)
            .iter()
            .copied()
            .filter(|&(v, l)| !blocked_nodes[v.0] && !blocked_links.contains(&l))
            .filter(|&(v, l)| dist[v.0].is_some_and(|dv| dv + network.link(l).delay == here))
            .min_by_key(|&(_, l)| l)?;
        nodes.push(next);
        links.push(link);
        at = next;
    }
    Some(Path { nodes, links, delay: total })
}

/// Yen's enumeration of the `d` loopless minimum-delay paths, ordered by
/// `(delay, link id sequence)`. Returns fewer when fewer exist and nothing
/// when the pair is disconnected.
pub fn k_shortest_paths(network: &SatelliteNetwork, src: SatelliteId, dst: SatelliteId, d: usize) -> Vec<Path> {
    if d == 0 || !network.contains(src) || !network.contains(dst) {
        return Vec::new();
    }
    let n = network.satellite_count();
    let no_nodes = vec![false; n];
    let Some(first) = shortest_path(network, src, dst, &no_nodes, &HashSet::new()) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    let mut seen: HashSet<Vec<LinkId>> = HashSet::new();
    seen.insert(accepted[0].links.clone());
    let mut candidates: BTreeSet<(Fixed, Vec<LinkId>, Vec<SatelliteId>)> = BTreeSet::new();

    while accepted.len() < d {
        let last = accepted.last().expect("non-empty").clone();
        for i in 0..last.links.len() {
            let spur = last.nodes[i];
            let root_nodes = &last.nodes[..=i];
            let blocked_links: HashSet<LinkId> = accepted
                .iter()
                .filter(|p| p.nodes.len() > i + 1 && p.nodes[..=i] == *root_nodes)
                .map(|p| p.links[i])
                .collect();
            let mut blocked_nodes = no_nodes.clone();
            for &r in &root_nodes[..i] {
                blocked_nodes[r.0] = true;
            }
            if let Some(spur_path) = shortest_path(network, spur, dst, &blocked_nodes, &blocked_links) {
                let mut links = last.links[..i].to_vec();
                links.extend_from_slice(&spur_path.links);
                if seen.contains(&links) {
                    continue;
                }
                let mut nodes = root_nodes.to_vec();
                nodes.extend_from_slice(&spur_path.nodes[1..]);
                let delay = links.iter().map(|&l| network.link(l).delay).sum();
                candidates.insert((delay, links, nodes));
            }
        }
        let Some((delay, links, nodes)) = candidates.pop_first() else {
            break;
        };
        seen.insert(links.clone());
        accepted.push(Path { nodes, links, delay });
    }
    accepted
}

/// All-pairs table of up to `d` shortest paths.
#[derive(Clone, Debug)]
pub struct PathTable {
    n: usize,
    d: usize,
    paths: Vec<Vec<Path>>,
}

impl PathTable {
    pub fn build(network: &SatelliteNetwork, d: usize) -> Self {
        let n = network.satellite_count();
        let mut paths = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                paths.push(k_shortest_paths(network, SatelliteId(a), SatelliteId(b), d));
            }
        }
        PathTable { n, d, paths }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn paths(&self, src: SatelliteId, dst: SatelliteId) -> &[Path] {
        &self.paths[src.0 * self.n + dst.0]
    }
}

/// A routed option between the source and destination access satellites.
#[derive(Clone, Copy, Debug)]
pub struct Candidate<'a> {
    pub src_access: SatelliteId,
    pub dst_access: SatelliteId,
    pub path: &'a Path,
    /// Access delays plus path delay, ms.
    pub delay: Fixed,
}

/// One leg between a user's access satellite and the data center.
#[derive(Clone, Copy, Debug)]
pub struct CloudLeg<'a> {
    /// Access satellite on the user side.
    pub user_access: SatelliteId,
    /// Satellite holding the ground link to the data center.
    pub gateway: SatelliteId,
    /// Oriented in traffic direction: user to gateway for uplinks, gateway to
    /// user for downlinks.
    pub path: &'a Path,
    /// Access, path and ground delays, ms.
    pub delay: Fixed,
}

pub(crate) fn neighbours_of(
    request: &UserRequest,
    coverage: &CoverageMap,
) -> Result<(Vec<SatelliteId>, Vec<SatelliteId>)> {
    let src = coverage.neighbouring_satellites(request.source).unwrap_or_default();
    if src.is_empty() {
        return Err(Error::NoCoverage { request: request.id, side: "source" });
    }
    let dst = coverage.neighbouring_satellites(request.destination).unwrap_or_default();
    if dst.is_empty() {
        return Err(Error::NoCoverage { request: request.id, side: "destination" });
    }
    Ok((src, dst))
}

/// Evaluates every (source neighbour, destination neighbour, path)
/// combination and keeps the `d` lowest-delay ones, ties broken by source
/// then destination satellite then path rank.
pub fn candidate_paths<'a>(
    request: &UserRequest,
    table: &'a PathTable,
    coverage: &CoverageMap,
    d: usize,
) -> Result<Vec<Candidate<'a>>> {
    let (src_sats, dst_sats) = neighbours_of(request, coverage)?;
    let mut all = Vec::new();
    for &s in &src_sats {
        let ingress = coverage.access_delay(request.source, s);
        for &t in &dst_sats {
            let egress = coverage.access_delay(request.destination, t);
            for (rank, path) in table.paths(s, t).iter().take(d).enumerate() {
                all.push((ingress + path.delay + egress, s, t, rank, path));
            }
        }
    }
    all.sort_by_key(|&(delay, s, t, rank, _)| (delay, s, t, rank));
    all.truncate(d);
    Ok(all
        .into_iter()
        .map(|(delay, src_access, dst_access, _, path)| Candidate { src_access, dst_access, path, delay })
        .collect())
}

/// Number of combinations `candidate_paths` evaluates before truncation.
pub fn candidate_evaluations(
    request: &UserRequest,
    table: &PathTable,
    coverage: &CoverageMap,
    d: usize,
) -> Result<usize> {
    let (src_sats, dst_sats) = neighbours_of(request, coverage)?;
    Ok(src_sats
        .iter()
        .flat_map(|&s| dst_sats.iter().map(move |&t| (s, t)))
        .map(|(s, t)| table.paths(s, t).len().min(d))
        .sum())
}

/// The `d` lowest-delay routes from the request's source to the data center.
pub fn uplink_candidates<'a>(
    request: &UserRequest,
    network: &SatelliteNetwork,
    table: &'a PathTable,
    coverage: &CoverageMap,
    d: usize,
) -> Result<Vec<CloudLeg<'a>>> {
    let cloud = network.cloud().ok_or(Error::NoCloud)?;
    let src = coverage.neighbouring_satellites(request.source).unwrap_or_default();
    if src.is_empty() {
        return Err(Error::NoCoverage { request: request.id, side: "source" });
    }
    let mut all = Vec::new();
    for &s in &src {
        let ingress = coverage.access_delay(request.source, s);
        for g in &cloud.ground_links {
            for (rank, path) in table.paths(s, g.satellite).iter().take(d).enumerate() {
                all.push((ingress + path.delay + g.delay, s, g.satellite, rank, path));
            }
        }
    }
    all.sort_by_key(|&(delay, s, g, rank, _)| (delay, s, g, rank));
    all.truncate(d);
    Ok(all
        .into_iter()
        .map(|(delay, user_access, gateway, _, path)| CloudLeg { user_access, gateway, path, delay })
        .collect())
}

/// The `d` lowest-delay routes from the data center to the request's destination.
pub fn downlink_candidates<'a>(
    request: &UserRequest,
    network: &SatelliteNetwork,
    table: &'a PathTable,
    coverage: &CoverageMap,
    d: usize,
) -> Result<Vec<CloudLeg<'a>>> {
    let cloud = network.cloud().ok_or(Error::NoCloud)?;
    let dst = coverage.neighbouring_satellites(request.destination).unwrap_or_default();
    if dst.is_empty() {
        return Err(Error::NoCoverage { request: request.id, side: "destination" });
    }
    let mut all = Vec::new();
    for g in &cloud.ground_links {
        for &t in &dst {
            let egress = coverage.access_delay(request.destination, t);
            for (rank, path) in table.paths(g.satellite, t).iter().take(d).enumerate() {
                all.push((g.delay + path.delay + egress, g.satellite, t, rank, path));
            }
        }
    }
    all.sort_by_key(|&(delay, g, t, rank, _)| (delay, g, t, rank));
    all.truncate(d);
    Ok(all
        .into_iter()
        .map(|(delay, gateway, user_access, _, path)| CloudLeg { user_access, gateway, path, delay })
        .collect())
}
