//! Constellation graph, cloud attachment and the ground coverage model.
//!
//! Satellites are laid out on a torus: plane `j`, slot `k` has index
//! `j * sats_per_plane + k`. Each plane is a ring of intra-plane links and
//! each slot position is a ring of inter-plane links. The ground area is a
//! grid with one cell per satellite (slot along x, plane along y); a
//! satellite's footprint is its cell grown by the overlap fraction on every
//! side, and a border band of width `gap` around the grid is modeled but
//! covered only where some footprint reaches into it.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Fixed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SatelliteId(pub usize);

impl fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "isl{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    IntraPlane,
    InterPlane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Satellite {
    pub id: SatelliteId,
    /// vCPUs.
    pub cpu_capacity: Fixed,
    /// GB.
    pub mem_capacity: Fixed,
    pub plane: usize,
    pub slot_in_plane: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    /// Stored with the lower satellite index first.
    pub endpoints: (SatelliteId, SatelliteId),
    /// Mbps.
    pub bandwidth: Fixed,
    /// ms.
    pub delay: Fixed,
    pub kind: LinkKind,
}

impl Link {
    pub fn other(&self, end: SatelliteId) -> SatelliteId {
        if self.endpoints.0 == end {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn touches(&self, sat: SatelliteId) -> bool {
        self.endpoints.0 == sat || self.endpoints.1 == sat
    }
}

/// Satellite-to-ground link between a covering satellite and the data center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundLink {
    pub satellite: SatelliteId,
    /// Mbps.
    pub bandwidth: Fixed,
    /// ms, same value in both directions.
    pub delay: Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudDataCenter {
    pub ground_links: Vec<GroundLink>,
}

impl CloudDataCenter {
    pub fn covering_satellites(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        self.ground_links.iter().map(|g| g.satellite)
    }

    /// Index of the ground link attached to `sat`, if it covers the data center.
    pub fn ground_link_index(&self, sat: SatelliteId) -> Option<usize> {
        self.ground_links.iter().position(|g| g.satellite == sat)
    }
}

/// Parameters of the torus constellation. Defaults are the 3x4 reference
/// constellation with 96 vCPU / 112 GB edge servers and 1 Gbps ISLs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationParams {
    pub planes: usize,
    pub sats_per_plane: usize,
    pub cpu_capacity: f64,
    pub mem_capacity: f64,
    pub isl_bandwidth: f64,
    /// Delay of the intra-plane link leaving an even slot towards the next slot.
    pub intra_forward_delay: f64,
    /// Delay of the intra-plane link leaving an odd slot towards the next slot.
    pub intra_backward_delay: f64,
    pub inter_plane_delay: f64,
    pub link_delay_overrides: Vec<LinkDelayOverride>,
}

impl Default for ConstellationParams {
    fn default() -> Self {
        ConstellationParams {
            planes: 3,
            sats_per_plane: 4,
            cpu_capacity: 96.0,
            mem_capacity: 112.0,
            isl_bandwidth: 1000.0,
            intra_forward_delay: 7.25,
            intra_backward_delay: 12.6,
            inter_plane_delay: 13.4,
            link_delay_overrides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDelayOverride {
    pub a: usize,
    pub b: usize,
    pub delay_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteNetwork {
    pub satellites: Vec<Satellite>,
    pub isl_links: Vec<Link>,
    pub cloud: Option<CloudDataCenter>,
    planes: usize,
    sats_per_plane: usize,
    adjacency: Vec<Vec<(SatelliteId, LinkId)>>,
}

/// Builds the torus constellation. Rings of size two collapse to a single
/// link and rings of size one produce none.
pub fn build_constellation(params: &ConstellationParams) -> SatelliteNetwork {
    let planes = params.planes.max(1);
    let per_plane = params.sats_per_plane.max(1);
    let index = |plane: usize, slot: usize| SatelliteId(plane * per_plane + slot);

    let satellites = (0..planes)
        .flat_map(|plane| (0..per_plane).map(move |slot| (plane, slot)))
        .map(|(plane, slot)| Satellite {
            id: index(plane, slot),
            cpu_capacity: Fixed::from_f64(params.cpu_capacity),
            mem_capacity: Fixed::from_f64(params.mem_capacity),
            plane,
            slot_in_plane: slot,
        })
        .collect::<Vec<_>>();

    let mut seen = BTreeSet::new();
    let mut links = Vec::new();
    let mut push = |a: SatelliteId, b: SatelliteId, delay: f64, kind: LinkKind| {
        if a == b {
            return;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            return;
        }
        links.push(Link {
            id: LinkId(links.len()),
            endpoints: key,
            bandwidth: Fixed::from_f64(params.isl_bandwidth),
            delay: Fixed::from_f64(delay),
            kind,
        });
    };

    for plane in 0..planes {
        for slot in 0..per_plane {
            let delay = if slot % 2 == 0 { params.intra_forward_delay } else { params.intra_backward_delay };
            push(index(plane, slot), index(plane, (slot + 1) % per_plane), delay, LinkKind::IntraPlane);
        }
    }
    for slot in 0..per_plane {
        for plane in 0..planes {
            push(index(plane, slot), index((plane + 1) % planes, slot), params.inter_plane_delay, LinkKind::InterPlane);
        }
    }

    let mut network = SatelliteNetwork {
        satellites,
        isl_links: links,
        cloud: None,
        planes,
        sats_per_plane: per_plane,
        adjacency: Vec::new(),
    };
    network.rebuild_adjacency();
    network
}

impl SatelliteNetwork {
    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.satellites.len()];
        for link in &self.isl_links {
            let (a, b) = link.endpoints;
            adjacency[a.0].push((b, link.id));
            adjacency[b.0].push((a, link.id));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(_, link)| link);
        }
        self.adjacency = adjacency;
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn sats_per_plane(&self) -> usize {
        self.sats_per_plane
    }

    pub fn satellite_count(&self) -> usize {
        self.satellites.len()
    }

    pub fn link_count(&self) -> usize {
        self.isl_links.len()
    }

    pub fn satellite_ids(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        self.satellites.iter().map(|s| s.id)
    }

    pub fn contains(&self, sat: SatelliteId) -> bool {
        sat.0 < self.satellites.len()
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.isl_links[id.0]
    }

    /// Neighbours of `sat` with the connecting link, ordered by link id.
    pub fn neighbours(&self, sat: SatelliteId) -> &[(SatelliteId, LinkId)] {
        &self.adjacency[sat.0]
    }

    pub fn degree(&self, sat: SatelliteId) -> usize {
        self.adjacency[sat.0].len()
    }

    pub fn link_between(&self, a: SatelliteId, b: SatelliteId) -> Option<LinkId> {
        self.adjacency.get(a.0)?.iter().find(|&&(other, _)| other == b).map(|&(_, l)| l)
    }

    pub fn is_connected(&self) -> bool {
        if self.satellites.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.satellites.len()];
        let mut stack = vec![SatelliteId(0)];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &(n, _) in self.neighbours(s) {
                if !seen[n.0] {
                    seen[n.0] = true;
                    stack.push(n);
                }
            }
        }
        seen.into_iter().all(|v| v)
    }

    /// Replaces the delay of the link between `a` and `b`.
    pub fn set_link_delay(&mut self, a: SatelliteId, b: SatelliteId, delay_ms: f64) -> Result<()> {
        if delay_ms.is_nan() || delay_ms <= 0.0 {
            return Err(Error::invalid("link_delay_overrides.delay_ms", "must be > 0"));
        }
        let link = self
            .link_between(a, b)
            .ok_or_else(|| Error::invalid("link_delay_overrides", format!("no link between {a} and {b}")))?;
        self.isl_links[link.0].delay = Fixed::from_f64(delay_ms);
        Ok(())
    }

    /// Copy of the network without the given links; remaining links are renumbered.
    pub fn without_links(&self, remove: &[LinkId]) -> SatelliteNetwork {
        let mut out = self.clone();
        out.isl_links = self
            .isl_links
            .iter()
            .filter(|l| !remove.contains(&l.id))
            .cloned()
            .enumerate()
            .map(|(i, mut l)| {
                l.id = LinkId(i);
                l
            })
            .collect();
        out.rebuild_adjacency();
        out
    }

    pub fn cloud(&self) -> Option<&CloudDataCenter> {
        self.cloud.as_ref()
    }
}

/// Attaches a data center reachable through `covering` satellites, each over
/// its own ground link with the given bandwidth (Mbps) and delay (ms).
pub fn attach_cloud(
    mut network: SatelliteNetwork,
    covering: &[SatelliteId],
    bandwidth: f64,
    delay: f64,
) -> Result<SatelliteNetwork> {
    if covering.is_empty() {
        return Err(Error::EmptyCloudCoverage);
    }
    if bandwidth.is_nan() || bandwidth <= 0.0 {
        return Err(Error::invalid("cloud.bandwidth", "must be > 0"));
    }
    if delay.is_nan() || delay <= 0.0 {
        return Err(Error::invalid("cloud.delay", "must be > 0"));
    }
    let mut unique = BTreeSet::new();
    for &sat in covering {
        if !network.contains(sat) {
            return Err(Error::UnknownSatellite(sat));
        }
        unique.insert(sat);
    }
    network.cloud = Some(CloudDataCenter {
        ground_links: unique
            .into_iter()
            .map(|satellite| GroundLink {
                satellite,
                bandwidth: Fixed::from_f64(bandwidth),
                delay: Fixed::from_f64(delay),
            })
            .collect(),
    });
    Ok(network)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GroundPoint { x, y }
    }
}

/// Coverage geometry and user access delays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    planes: usize,
    sats_per_plane: usize,
    overlap: f64,
    gap: f64,
    access_delay: Fixed,
}

impl CoverageMap {
    /// `overlap` grows each cell on all sides, as a fraction of the cell
    /// size; `gap` is the width of the border band around the grid.
    pub fn new(network: &SatelliteNetwork, overlap: f64, gap: f64, access_delay_ms: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::invalid("coverage.overlap", "must lie in [0, 1)"));
        }
        if !(gap >= 0.0 && gap.is_finite()) {
            return Err(Error::invalid("coverage.gap", "must be >= 0"));
        }
        if access_delay_ms.is_nan() || access_delay_ms <= 0.0 {
            return Err(Error::invalid("coverage.access_delay_ms", "must be > 0"));
        }
        Ok(CoverageMap {
            planes: network.planes(),
            sats_per_plane: network.sats_per_plane(),
            overlap,
            gap,
            access_delay: Fixed::from_f64(access_delay_ms),
        })
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Modeled area as half-open `[x0, x1) x [y0, y1)`.
    pub fn area(&self) -> (f64, f64, f64, f64) {
        (-self.gap, self.sats_per_plane as f64 + self.gap, -self.gap, self.planes as f64 + self.gap)
    }

    pub fn contains(&self, point: GroundPoint) -> bool {
        let (x0, x1, y0, y1) = self.area();
        point.x >= x0 && point.x < x1 && point.y >= y0 && point.y < y1
    }

    /// Footprint of `sat` as half-open `[x0, x1) x [y0, y1)`.
    pub fn footprint(&self, sat: SatelliteId) -> (f64, f64, f64, f64) {
        let plane = (sat.0 / self.sats_per_plane) as f64;
        let slot = (sat.0 % self.sats_per_plane) as f64;
        let o = self.overlap;
        (slot - o, slot + 1.0 + o, plane - o, plane + 1.0 + o)
    }

    fn covers(&self, sat: SatelliteId, point: GroundPoint) -> bool {
        let (x0, x1, y0, y1) = self.footprint(sat);
        point.x >= x0 && point.x < x1 && point.y >= y0 && point.y < y1
    }

    /// Satellites whose footprint contains `point`, ascending by id.
    pub fn neighbouring_satellites(&self, point: GroundPoint) -> Result<Vec<SatelliteId>> {
        if !self.contains(point) {
            return Err(Error::OutsideArea { x: point.x, y: point.y });
        }
        Ok(self.covering(point))
    }

    fn covering(&self, point: GroundPoint) -> Vec<SatelliteId> {
        // Only the cell containing the point and its eight neighbours can reach it.
        let cx = point.x.floor() as i64;
        let cy = point.y.floor() as i64;
        let mut out = Vec::new();
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (px, py) = (cx + dx, cy + dy);
                if px < 0 || py < 0 || px >= self.sats_per_plane as i64 || py >= self.planes as i64 {
                    continue;
                }
                let sat = SatelliteId(py as usize * self.sats_per_plane + px as usize);
                if self.covers(sat, point) {
                    out.push(sat);
                }
            }
        }
        out.sort();
        out
    }

    /// Access delay between a ground point and a covering satellite (ms).
    pub fn access_delay(&self, _point: GroundPoint, _sat: SatelliteId) -> Fixed {
        self.access_delay
    }

    /// Draws a point uniformly over the covered part of the area.
    pub fn sample_covered_point<R: Rng + ?Sized>(&self, rng: &mut R) -> GroundPoint {
        let (ax0, ax1, ay0, ay1) = self.area();
        let o = self.overlap;
        let x0 = ax0.max(-o);
        let x1 = ax1.min(self.sats_per_plane as f64 + o);
        let y0 = ay0.max(-o);
        let y1 = ay1.min(self.planes as f64 + o);
        loop {
            let point = GroundPoint::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
            if self.contains(point) && !self.covering(point).is_empty() {
                return point;
            }
        }
    }
}
