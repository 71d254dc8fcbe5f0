#![allow(dead_code)]

use satvnf::requests::{UserRequest, Vnf};
use satvnf::topology::{attach_cloud, build_constellation, ConstellationParams, CoverageMap, GroundPoint, SatelliteId};
use satvnf::{Fixed, Scenario};

pub fn vnf(cpu: f64, mem: f64, t: f64) -> Vnf {
    Vnf { cpu_demand: Fixed::from_f64(cpu), mem_demand: Fixed::from_f64(mem), compute_time: Fixed::from_f64(t) }
}

/// Chain `access, interior.., access` with one bandwidth per edge.
pub fn request(id: u64, interior: Vec<Vnf>, bw: &[f64], from: GroundPoint, to: GroundPoint) -> UserRequest {
    let mut vnfs = vec![Vnf::access()];
    vnfs.extend(interior);
    vnfs.push(Vnf::access());
    assert_eq!(bw.len(), vnfs.len() - 1);
    UserRequest {
        id,
        vnfs,
        chain_bandwidth: bw.iter().map(|&b| Fixed::from_f64(b)).collect(),
        source: from,
        destination: to,
        max_delay: Fixed::from_f64(250.0),
        arrival_slot: 0,
        duration: 1,
    }
}

pub fn scenario(planes: usize, per_plane: usize, cloud: &[usize], overlap: f64) -> Scenario {
    let p = ConstellationParams { planes, sats_per_plane: per_plane, ..Default::default() };
    let net = build_constellation(&p);
    let gws: Vec<SatelliteId> = cloud.iter().map(|&i| SatelliteId(i)).collect();
    let net = if gws.is_empty() { net } else { attach_cloud(net, &gws, 10_000.0, 13.1).unwrap() };
    let cov = CoverageMap::new(&net, overlap, 0.0, 13.1).unwrap();
    Scenario::new(net, cov, 8)
}

/// Centre of a satellite's footprint; covered by that satellite alone when
/// the overlap is below one half.
pub fn centre(sc: &Scenario, sat: usize) -> GroundPoint {
    let s = sc.network.sats_per_plane();
    GroundPoint::new((sat % s) as f64 + 0.5, (sat / s) as f64 + 0.5)
}
