use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::plan::{validate_plan_with, Assignment, Chaining, ModelKind, Plan, Trip, EPS};
use crate::tsp::tsp_exact;

use super::policy::{Decision, DispatchRule, EpochState};
use super::sampling::Scenario;

/// Grid points are compared with this slack so that float round-off in
/// `j * step` never skips an epoch.
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub served: usize,
    /// Executed trips, checkable as an F1 plan with idle time allowed.
    pub plan: Plan,
    /// Every decision taken, with its epoch time.
    pub trace: Vec<(f64, Decision)>,
}

/// Runs one day: the vehicle decides on a grid of epochs whenever it is idle
/// at the depot, and dispatched trips cannot be recalled.
pub fn run_episode<R: DispatchRule + ?Sized>(
    inst: &ValidInstance,
    scenario: &Scenario,
    rule: &R,
    grid_step: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(SddError::Config(format!("grid step must be positive, got {grid_step}")));
    }
    let n = inst.orders.len();
    if scenario.releases.len() != n {
        return Err(SddError::Config(format!(
            "scenario has {} releases for {n} orders",
            scenario.releases.len()
        )));
    }
    let realized = inst.with_releases(&scenario.releases);
    let horizon = inst.horizon;
    let mut delivered = vec![false; n];
    let mut trips = Vec::new();
    let mut assignments = Vec::new();
    let mut trace = Vec::new();
    let mut epoch: u64 = 0;

    loop {
        let time = epoch as f64 * grid_step;
        if time > horizon + GRID_SLACK {
            break;
        }
        // Stop once nothing left can still be delivered.
        let open = (0..n).any(|i| {
            !delivered[i] && scenario.releases[i].max(time) + inst.order_round_trip(i) <= horizon + EPS
        });
        if !open {
            break;
        }
        let (released, pending): (Vec<usize>, Vec<usize>) = (0..n)
            .filter(|&i| !delivered[i])
            .partition(|&i| scenario.releases[i] <= time + GRID_SLACK);
        let state = EpochState {
            inst,
            time,
            grid_step,
            released,
            pending,
        };
        let decision = rule.decide(&state, rng)?;
        trace.push((time, decision.clone()));
        let ids = match decision {
            Decision::Wait => {
                epoch += 1;
                continue;
            }
            Decision::Dispatch(ids) => ids,
        };
        if ids.is_empty() {
            return Err(SddError::Protocol(format!("empty dispatch at time {time}")));
        }
        let mut nodes = Vec::with_capacity(ids.len());
        for &id in &ids {
            let pos = inst
                .order_pos(id)
                .ok_or_else(|| SddError::Protocol(format!("unknown order {id} at time {time}")))?;
            if !state.released.contains(&pos) {
                return Err(SddError::Protocol(format!(
                    "order {id} dispatched at time {time} is unreleased or already delivered"
                )));
            }
            nodes.push(pos + 1);
        }
        let tour = tsp_exact(inst.order_matrix(), &nodes)?;
        let back = time + tour.length;
        if back > horizon + EPS {
            return Err(SddError::Protocol(format!(
                "trip dispatched at {time} returns at {back}, after the horizon {horizon}"
            )));
        }
        let k = trips.len();
        let mut route = vec![0];
        let mut t = time;
        let mut prev = 0;
        for &v in &tour.nodes {
            t += inst.order_matrix().get(prev, v);
            prev = v;
            delivered[v - 1] = true;
            route.push(inst.orders[v - 1].id);
            assignments.push(Assignment {
                order: inst.orders[v - 1].id,
                trip: k,
                option: None,
                station: None,
                delivery_time: t,
            });
        }
        route.push(0);
        trips.push(Trip {
            route,
            start: time,
            end: back,
        });
        // Next epoch: first grid point at or after the return.
        epoch = ((back / grid_step) - GRID_SLACK).ceil().max(epoch as f64) as u64;
    }

    assignments.sort_by_key(|a| a.order);
    let plan = Plan {
        model_kind: ModelKind::F1,
        trips,
        assignments,
        unserved: (0..n).filter(|&i| !delivered[i]).map(|i| inst.orders[i].id).collect(),
    };
    if let Err(v) = validate_plan_with(&realized, &plan, Chaining::Relaxed) {
        return Err(SddError::InvalidPlan(v));
    }
    Ok(Episode {
        served: plan.num_served(),
        plan,
        trace,
    })
}
