//! Pickup-station delivery: direct depot-station-depot trips, or routed
//! trips over several stations, minimizing total service time with a
//! `big_m` charge for every unserved order.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::plan::{ModelKind, Plan, EPS};

use super::labels::{self, TripGenerator, TripOption};
use super::{build_plan, check_size, route_profiles, Budget, Load, PlanKey, RouteProfile};
use super::{SolveReport, SolverConfig, TripDraft};

const STATION_ORDER_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationVisit {
    pub station: u32,
    pub arrival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationTrip {
    pub trip: usize,
    pub visits: Vec<StationVisit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationOrder {
    pub order: u32,
    pub station: u32,
    pub pickup_time: f64,
}

/// Station-level view of a plan: arrivals per trip and pickups per order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationPlanExtras {
    pub trips: Vec<StationTrip>,
    pub orders: Vec<StationOrder>,
}

impl StationPlanExtras {
    pub fn from_plan(inst: &ValidInstance, plan: &Plan) -> StationPlanExtras {
        let dist = inst.station_matrix();
        let trips = plan
            .trips
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let mut time = t.start;
                let mut prev = 0;
                let visits = t
                    .interior()
                    .iter()
                    .map(|&sid| {
                        let node = inst.station_pos(sid).map_or(0, |p| p + 1);
                        time += dist.get(prev, node);
                        prev = node;
                        StationVisit {
                            station: sid,
                            arrival: time,
                        }
                    })
                    .collect();
                StationTrip { trip: k, visits }
            })
            .collect();
        let orders = plan
            .assignments
            .iter()
            .filter_map(|a| {
                a.station.map(|s| StationOrder {
                    order: a.order,
                    station: s,
                    pickup_time: a.delivery_time,
                })
            })
            .collect();
        StationPlanExtras { trips, orders }
    }
}

struct StationTrips<'a> {
    inst: &'a ValidInstance,
    direct: bool,
    /// Order position per bit.
    orders: Vec<usize>,
    /// Feasible station positions per bit.
    feasible: Vec<Vec<usize>>,
    /// Routed model only: profiles over station subsets.
    profiles: Vec<Vec<RouteProfile>>,
    assignment: Vec<usize>,
    delta: Vec<u16>,
}

impl StationTrips<'_> {
    fn direct_options(&self, members: &[usize], start: f64, usage: &[u16], out: &mut Vec<TripOption>) {
        let inst = self.inst;
        for &s in &self.feasible[members[0]] {
            if !members.iter().all(|&b| self.feasible[b].contains(&s)) {
                continue;
            }
            if u32::from(usage[s]) + members.len() as u32 > inst.stations[s].capacity {
                continue;
            }
            let leg = inst.station_leg(s);
            let t = start + leg;
            let cost = members.iter().map(|&b| t - inst.orders[self.orders[b]].release).sum();
            let mut delta = vec![0u16; usage.len()];
            delta[s] = members.len() as u16;
            out.push(TripOption {
                end: start + 2.0 * leg,
                cost,
                dist: 2.0 * leg,
                usage: delta,
                draft: TripDraft {
                    start,
                    visits: vec![s + 1],
                    loads: members
                        .iter()
                        .map(|&b| Load {
                            order: self.orders[b],
                            option: None,
                            station: Some(s),
                            time: t,
                        })
                        .collect(),
                },
            });
        }
    }

    /// Enumerates station choices for `members[idx..]`, then every route
    /// profile over the stations in use.
    fn routed_options(&mut self, members: &[usize], idx: usize, start: f64, usage: &[u16], out: &mut Vec<TripOption>) {
        let inst = self.inst;
        if idx == members.len() {
            let mut used = 0usize;
            for &s in &self.assignment {
                used |= 1 << s;
            }
            let releases: f64 = members.iter().map(|&b| inst.orders[self.orders[b]].release).sum();
            for p in &self.profiles[used] {
                let offsets: f64 = self.assignment.iter().map(|&s| p.offsets[s]).sum();
                let cost = members.len() as f64 * start + offsets - releases;
                out.push(TripOption {
                    end: start + p.len,
                    cost,
                    dist: p.len,
                    usage: self.delta.clone(),
                    draft: TripDraft {
                        start,
                        visits: p.nodes.clone(),
                        loads: members
                            .iter()
                            .zip(&self.assignment)
                            .map(|(&b, &s)| Load {
                                order: self.orders[b],
                                option: None,
                                station: Some(s),
                                time: start + p.offsets[s],
                            })
                            .collect(),
                    },
                });
            }
            return;
        }
        let b = members[idx];
        for fi in 0..self.feasible[b].len() {
            let s = self.feasible[b][fi];
            if u32::from(usage[s] + self.delta[s]) + 1 > inst.stations[s].capacity {
                continue;
            }
            self.delta[s] += 1;
            self.assignment.push(s);
            self.routed_options(members, idx + 1, start, usage, out);
            self.assignment.pop();
            self.delta[s] -= 1;
        }
    }
}

impl TripGenerator for StationTrips<'_> {
    fn options(&mut self, set: u32, ready: f64, usage: &[u16], out: &mut Vec<TripOption>) {
        let members: Vec<usize> = (0..self.orders.len()).filter(|b| set & (1 << b) != 0).collect();
        let start = members
            .iter()
            .map(|&b| self.inst.orders[self.orders[b]].release)
            .fold(ready, f64::max);
        if self.direct {
            self.direct_options(&members, start, usage, out);
        } else {
            self.delta.iter_mut().for_each(|d| *d = 0);
            self.assignment.clear();
            self.routed_options(&members, 0, start, usage, out);
        }
    }
}

fn solve_stations(inst: &ValidInstance, cfg: &SolverConfig, kind: ModelKind) -> Result<SolveReport> {
    let feasible_all = inst.require_stations()?;
    let big_m = inst.big_m();
    if big_m < inst.horizon {
        return Err(SddError::Config(format!(
            "big_m {big_m} is below the horizon {}; the unserved penalty must dominate",
            inst.horizon
        )));
    }
    let max_trips = cfg.trip_bound(inst)?;
    let mut budget = Budget::new(cfg);
    let n_stations = inst.stations.len();

    // Usable stations per order: nonzero capacity and a direct trip fits.
    let usable: Vec<Vec<usize>> = (0..inst.orders.len())
        .map(|i| {
            let r = inst.orders[i].release;
            feasible_all[i]
                .iter()
                .copied()
                .filter(|&s| {
                    inst.stations[s].capacity > 0 && r + 2.0 * inst.station_leg(s) <= inst.horizon + EPS
                })
                .collect()
        })
        .collect();
    let servable: Vec<usize> = (0..inst.orders.len()).filter(|&i| !usable[i].is_empty()).collect();
    check_size("station-model servable orders", servable.len(), STATION_ORDER_LIMIT)?;

    let profiles = if kind == ModelKind::F4 {
        let nodes: Vec<usize> = (1..=n_stations).collect();
        route_profiles(
            inst.station_matrix(),
            &nodes,
            &vec![f64::INFINITY; n_stations],
            &vec![inst.horizon + EPS; n_stations],
        )?
    } else {
        Vec::new()
    };
    let mut generator = StationTrips {
        inst,
        direct: kind == ModelKind::F3,
        orders: servable.clone(),
        feasible: servable.iter().map(|&i| usable[i].clone()).collect(),
        profiles,
        assignment: Vec::new(),
        delta: vec![0; n_stations],
    };
    let k = servable.len();
    let outcome = labels::run(
        &mut generator,
        k,
        ((1u64 << k) - 1) as u32,
        n_stations,
        max_trips,
        inst.horizon,
        &mut budget,
    );

    let penalty_all: f64 = inst.orders.iter().map(|o| big_m - o.release).sum();
    let mut best: Option<(PlanKey, f64, &labels::Label)> = None;
    for (mask, label) in outcome.iter() {
        let served: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| servable[b]).collect();
        let objective = penalty_all - served.iter().map(|&i| big_m - inst.orders[i].release).sum::<f64>() + label.cost;
        let mut ids: Vec<u32> = served.iter().map(|&i| inst.orders[i].id).collect();
        ids.sort_unstable();
        let key = PlanKey {
            scores: PlanKey::scores(kind, ids.len(), objective),
            trips: label.trips,
            dist: label.dist,
            served_ids: ids,
        };
        if best.as_ref().is_none_or(|(b, _, _)| key.cmp(b).is_lt()) {
            best = Some((key, objective, label));
        }
    }
    let (key, objective, label) = best.expect("empty label always present");
    let plan = build_plan(inst, kind, &outcome.drafts(label));
    let optimal = outcome.complete;
    let lower: f64 = inst
        .orders
        .iter()
        .enumerate()
        .map(|(i, o)| {
            usable[i]
                .iter()
                .map(|&s| inst.station_leg(s))
                .fold(big_m - o.release, f64::min)
        })
        .sum();
    Ok(SolveReport {
        model_kind: kind,
        objective,
        served: key.served_ids.len(),
        stations: Some(StationPlanExtras::from_plan(inst, &plan)),
        plan,
        optimal,
        nodes_explored: budget.nodes,
        runtime: budget.elapsed(),
        bound_gap: if optimal {
            0.0
        } else {
            (objective - lower).max(f64::MIN_POSITIVE)
        },
    })
}

/// Direct trips: each trip serves exactly one station.
pub fn solve_f3(inst: &ValidInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_stations(inst, cfg, ModelKind::F3)
}

/// Routed trips: each trip tours any set of stations it delivers to.
pub fn solve_f4(inst: &ValidInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_stations(inst, cfg, ModelKind::F4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, Order, Station};
    use crate::plan::{eval_objective, validate_plan};

    fn single(capacity: u32) -> ValidInstance {
        let mut inst = Instance::new(250.0);
        inst.big_m = Some(250.0);
        inst.stations.push(Station::new(1, 3.0, 4.0, capacity));
        inst.orders.push(Order::new(1, 3.0, 4.0, 0.0).with_stations(vec![1]));
        inst.validate().unwrap()
    }

    fn check(inst: &ValidInstance, rep: &SolveReport) {
        validate_plan(inst, &rep.plan).unwrap();
        assert!((eval_objective(inst, &rep.plan).unwrap() - rep.objective).abs() < 1e-6);
    }

    #[test]
    fn one_direct_trip() {
        let inst = single(1);
        for rep in [solve_f3(&inst, &Default::default()).unwrap(), solve_f4(&inst, &Default::default()).unwrap()] {
            check(&inst, &rep);
            assert_eq!(rep.objective, 5.0);
            assert_eq!(rep.plan.trips[0].start, 0.0);
        }
    }

    #[test]
    fn zero_capacity_forces_penalty() {
        let inst = single(0);
        let rep = solve_f3(&inst, &Default::default()).unwrap();
        check(&inst, &rep);
        assert_eq!(rep.objective, 250.0);
        assert_eq!(rep.served, 0);
    }

    #[test]
    fn routing_beats_direct_trips_on_collinear_stations() {
        let mut inst = Instance::new(250.0);
        inst.big_m = Some(250.0);
        inst.stations = vec![Station::new(1, 10.0, 0.0, 5), Station::new(2, 20.0, 0.0, 5)];
        inst.orders = vec![
            Order::new(1, 10.0, 0.0, 0.0).with_stations(vec![1]),
            Order::new(2, 20.0, 0.0, 0.0).with_stations(vec![2]),
        ];
        let inst = inst.validate().unwrap();
        let f3 = solve_f3(&inst, &Default::default()).unwrap();
        let f4 = solve_f4(&inst, &Default::default()).unwrap();
        check(&inst, &f3);
        check(&inst, &f4);
        assert!((f3.objective - 50.0).abs() < 1e-9);
        assert!((f4.objective - 30.0).abs() < 1e-9);
        assert_eq!(f4.plan.trips[0].route, vec![0, 1, 2, 0]);
    }

    #[test]
    fn small_big_m_is_rejected() {
        let mut inst = single(1).into_inner();
        inst.big_m = Some(10.0);
        let inst = inst.validate().unwrap();
        assert!(matches!(solve_f3(&inst, &Default::default()), Err(SddError::Config(_))));
    }

    #[test]
    fn missing_station_data() {
        let mut inst = Instance::new(100.0);
        inst.stations.push(Station::new(1, 0.0, 1.0, 1));
        inst.orders.push(Order::new(1, 0.0, 0.0, 0.0));
        let inst = inst.validate().unwrap();
        assert!(matches!(solve_f4(&inst, &Default::default()), Err(SddError::MissingData(_))));
    }
}
