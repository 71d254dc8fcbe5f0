//! The immutable world a placement runs against: constellation, cloud,
//! coverage and the precomputed path table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathing::PathTable;
use crate::topology::{
    attach_cloud, build_constellation, ConstellationParams, CoverageMap, SatelliteId, SatelliteNetwork,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageParams {
    pub overlap: f64,
    pub gap: f64,
    pub access_delay_ms: f64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        CoverageParams { overlap: 0.1, gap: 0.0, access_delay_ms: 13.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudParams {
    pub enabled: bool,
    /// Zero-based satellite indices whose footprint contains the data center.
    pub covering: Vec<usize>,
    pub bandwidth_mbps: f64,
    pub delay_ms: f64,
}

impl Default for CloudParams {
    fn default() -> Self {
        CloudParams { enabled: true, covering: vec![5, 6], bandwidth_mbps: 10_000.0, delay_ms: 13.1 }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub network: SatelliteNetwork,
    pub coverage: CoverageMap,
    pub paths: PathTable,
}

impl Scenario {
    pub fn new(network: SatelliteNetwork, coverage: CoverageMap, d: usize) -> Self {
        let paths = PathTable::build(&network, d);
        Scenario { network, coverage, paths }
    }

    pub fn build(
        constellation: &ConstellationParams,
        coverage: &CoverageParams,
        cloud: &CloudParams,
        d: usize,
    ) -> Result<Self> {
        if constellation.planes == 0 {
            return Err(Error::invalid("topology.planes", "must be >= 1"));
        }
        if constellation.sats_per_plane == 0 {
            return Err(Error::invalid("topology.sats_per_plane", "must be >= 1"));
        }
        for (field, v) in [
            ("topology.cpu_capacity", constellation.cpu_capacity),
            ("topology.mem_capacity", constellation.mem_capacity),
            ("topology.isl_bandwidth", constellation.isl_bandwidth),
            ("topology.intra_forward_delay", constellation.intra_forward_delay),
            ("topology.intra_backward_delay", constellation.intra_backward_delay),
            ("topology.inter_plane_delay", constellation.inter_plane_delay),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be > 0 (got {v})")));
            }
        }
        if d == 0 {
            return Err(Error::invalid("solver.d", "must be >= 1"));
        }
        let mut network = build_constellation(constellation);
        for o in &constellation.link_delay_overrides {
            network.set_link_delay(SatelliteId(o.a), SatelliteId(o.b), o.delay_ms)?;
        }
        if cloud.enabled {
            let covering: Vec<SatelliteId> = cloud.covering.iter().map(|&i| SatelliteId(i)).collect();
            network = attach_cloud(network, &covering, cloud.bandwidth_mbps, cloud.delay_ms)?;
        }
        let coverage = CoverageMap::new(&network, coverage.overlap, coverage.gap, coverage.access_delay_ms)?;
        Ok(Scenario::new(network, coverage, d))
    }

    /// The reference constellation with default coverage and `d = 8`.
    pub fn reference() -> Self {
        Scenario::build(&ConstellationParams::default(), &CoverageParams::default(), &CloudParams::default(), 8)
            .expect("defaults are valid")
    }
}
