//! Cloud fallback: route the first chain edge up to the data center and the
//! last one back down, each on its lowest-delay feasible leg.

use super::{ground_fits, links_fit, SolverParams};
use crate::error::Result;
use crate::pathing::{downlink_candidates, uplink_candidates, CloudLeg};
use crate::requests::UserRequest;
use crate::scenario::Scenario;
use crate::state::{CloudPlacement, Delta, NetworkState, Placement, PlacementStrategy};
use crate::units::Fixed;

fn leg_fits(scenario: &Scenario, state: &NetworkState, shadow: &Delta, leg: &CloudLeg<'_>, bw: Fixed) -> bool {
    let Some(index) = scenario.network.cloud().and_then(|c| c.ground_link_index(leg.gateway)) else {
        return false;
    };
    links_fit(state, shadow, &leg.path.links, bw) && ground_fits(state, shadow, index, bw)
}

fn charge(scenario: &Scenario, shadow: &mut Delta, leg: &CloudLeg<'_>, bw: Fixed) {
    shadow.add_links(&leg.path.links, bw);
    if let Some(index) = scenario.network.cloud().and_then(|c| c.ground_link_index(leg.gateway)) {
        shadow.add_ground(index, bw);
    }
}

/// Picks the lowest-delay uplink with room, then the lowest-delay downlink
/// with room after the uplink's demand, then checks the delay bound.
/// `None` for chains without interior VNFs, without a data center, or when
/// either leg or the bound fails. `Err` only for uncovered endpoints.
pub fn path_selection_place(
    scenario: &Scenario,
    state: &NetworkState,
    request: &UserRequest,
    params: &SolverParams,
) -> Result<Option<PlacementStrategy>> {
    if request.interior_count() == 0 || scenario.network.cloud().is_none() {
        return Ok(None);
    }
    let ups = uplink_candidates(request, &scenario.network, &scenario.paths, &scenario.coverage, params.d)?;
    let downs = downlink_candidates(request, &scenario.network, &scenario.paths, &scenario.coverage, params.d)?;
    let up_bw = request.uplink_bandwidth();
    let down_bw = request.downlink_bandwidth();
    let mut shadow = Delta::default();
    let Some(up) = ups.iter().find(|leg| leg_fits(scenario, state, &shadow, leg, up_bw)) else {
        return Ok(None);
    };
    charge(scenario, &mut shadow, up, up_bw);
    let Some(down) = downs.iter().find(|leg| leg_fits(scenario, state, &shadow, leg, down_bw)) else {
        return Ok(None);
    };
    let delay = request.compute_delay() + up.delay + down.delay;
    if delay > request.max_delay {
        return Ok(None);
    }
    Ok(Some(PlacementStrategy {
        request: request.id,
        placement: Placement::Cloud(CloudPlacement {
            src_access: up.user_access,
            dst_access: down.user_access,
            uplink_gateway: up.gateway,
            downlink_gateway: down.gateway,
            uplink: up.path.clone(),
            downlink: down.path.clone(),
        }),
        delay,
    }))
}
