//! Exhaustive reference solver for small instances.
//!
//! Every sequence of trips is enumerated: which orders each trip carries and
//! in what order they are visited, or, for station models, which station
//! receives each parcel and in what order the stations are toured. Trips are
//! scheduled as early as possible and each sequence is scored directly.
//! Candidates that beat the incumbent are rebuilt as plans and re-checked by
//! the plan validator before being accepted.

use std::cmp::Ordering;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::plan::{eval_objective, validate_plan, Assignment, ModelKind, Plan, Trip, EPS};
use crate::solver::{best_option, PlanKey, SolveReport, StationPlanExtras};

/// Size limits beyond which the oracle refuses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleGuard {
    pub max_orders: usize,
    pub max_stations: usize,
    pub max_options: usize,
}

impl Default for OracleGuard {
    fn default() -> Self {
        OracleGuard {
            max_orders: 6,
            max_stations: 3,
            max_options: 3,
        }
    }
}

impl OracleGuard {
    /// Environment variable overriding the defaults: `N` or `N,P,D`.
    pub const ENV: &'static str = "SDD_ORACLE_LIMIT";

    pub fn parse(text: &str) -> Result<OracleGuard> {
        let bad = || SddError::Config(format!("oracle limit must be `N` or `N,P,D` with positive integers, got {text:?}"));
        let parts: Vec<usize> = text
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if parts.contains(&0) {
            return Err(bad());
        }
        let mut guard = OracleGuard::default();
        match parts[..] {
            [n] => guard.max_orders = n,
            [n, p, d] => {
                guard = OracleGuard {
                    max_orders: n,
                    max_stations: p,
                    max_options: d,
                }
            }
            _ => return Err(bad()),
        }
        Ok(guard)
    }

    /// Defaults, overridden by [`OracleGuard::ENV`] when set.
    pub fn from_env() -> Result<OracleGuard> {
        match std::env::var(Self::ENV) {
            Ok(v) => OracleGuard::parse(&v),
            Err(_) => Ok(OracleGuard::default()),
        }
    }

    pub fn check(&self, inst: &ValidInstance, kind: ModelKind) -> Result<()> {
        let limit = |what, size, limit| {
            if size > limit {
                Err(SddError::TooLarge { what, size, limit })
            } else {
                Ok(())
            }
        };
        limit("oracle orders", inst.orders.len(), self.max_orders)?;
        if kind.is_station_model() {
            limit("oracle stations", inst.stations.len(), self.max_stations)?;
        }
        if kind.is_slot_model() {
            limit("oracle options", inst.num_options(), self.max_options)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Drop {
    order: usize,
    option: Option<usize>,
    station: Option<usize>,
    time: f64,
}

#[derive(Debug, Clone)]
struct Leg {
    start: f64,
    len: f64,
    /// Matrix indices (orders or stations) in visiting order.
    visits: Vec<usize>,
    drops: Vec<Drop>,
    mask: u32,
    /// Contribution to the running score (served count, revenue, or
    /// pickup time minus penalty).
    gain: f64,
}

#[derive(Clone)]
struct Best {
    key: PlanKey,
    plan: Plan,
}

struct Enumerator<'a> {
    inst: &'a ValidInstance,
    kind: ModelKind,
    max_trips: usize,
    feasible: Vec<Vec<usize>>,
    legs: Vec<Leg>,
    usage: Vec<u32>,
    best: Option<Best>,
    explored: u64,
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |b| mask & (1 << b) != 0)
}

impl<'a> Enumerator<'a> {
    fn new(inst: &'a ValidInstance, kind: ModelKind, max_trips: usize, feasible: Vec<Vec<usize>>) -> Self {
        Enumerator {
            inst,
            kind,
            max_trips,
            feasible,
            legs: Vec::new(),
            usage: vec![0; inst.stations.len()],
            best: None,
            explored: 0,
        }
    }

    fn fork(&self) -> Self {
        Enumerator {
            inst: self.inst,
            kind: self.kind,
            max_trips: self.max_trips,
            feasible: self.feasible.clone(),
            legs: Vec::new(),
            usage: vec![0; self.inst.stations.len()],
            best: None,
            explored: 0,
        }
    }

    fn ready(&self) -> f64 {
        self.legs.last().map_or(0.0, |l| l.start + l.len)
    }

    fn served_mask(&self) -> u32 {
        self.legs.iter().fold(0, |m, l| m | l.mask)
    }

    /// Every way to run one more trip carrying exactly `set`.
    fn next_legs(&self, set: u32, out: &mut Vec<Leg>) {
        let inst = self.inst;
        let members: Vec<usize> = bits(set).collect();
        let start = members.iter().map(|&i| inst.orders[i].release).fold(self.ready(), f64::max);
        match self.kind {
            ModelKind::F1 | ModelKind::F2 | ModelKind::F2Lex => {
                let dist = inst.order_matrix();
                'perm: for perm in members.iter().copied().permutations(members.len()) {
                    let mut t = 0.0;
                    let mut prev = 0;
                    let mut drops = Vec::with_capacity(perm.len());
                    let mut gain = 0.0;
                    for &i in &perm {
                        t += dist.get(prev, i + 1);
                        prev = i + 1;
                        let o = &inst.orders[i];
                        let option = if self.kind == ModelKind::F1 {
                            gain += 1.0;
                            None
                        } else {
                            let deadlines = &inst.options.as_ref().expect("checked").deadlines;
                            let wtp = o.wtp.as_ref().expect("checked");
                            let Some((d, price)) = best_option(wtp, deadlines, o.release, start + t) else {
                                continue 'perm;
                            };
                            gain += price;
                            Some(d)
                        };
                        drops.push(Drop {
                            order: i,
                            option,
                            station: None,
                            time: start + t,
                        });
                    }
                    let len = t + dist.get(prev, 0);
                    if start + len > inst.horizon + EPS {
                        continue;
                    }
                    out.push(Leg {
                        start,
                        len,
                        visits: perm.iter().map(|&i| i + 1).collect(),
                        drops,
                        mask: set,
                        gain,
                    });
                }
            }
            ModelKind::F3 => {
                let m = inst.big_m();
                for s in 0..inst.stations.len() {
                    if !members.iter().all(|&i| self.feasible[i].contains(&s))
                        || self.usage[s] + members.len() as u32 > inst.stations[s].capacity
                    {
                        continue;
                    }
                    let leg = inst.station_leg(s);
                    if start + 2.0 * leg > inst.horizon + EPS {
                        continue;
                    }
                    let t = start + leg;
                    out.push(Leg {
                        start,
                        len: 2.0 * leg,
                        visits: vec![s + 1],
                        drops: members
                            .iter()
                            .map(|&i| Drop {
                                order: i,
                                option: None,
                                station: Some(s),
                                time: t,
                            })
                            .collect(),
                        mask: set,
                        gain: members.len() as f64 * (t - m),
                    });
                }
            }
            ModelKind::F4 => {
                let mut assign = Vec::with_capacity(members.len());
                let mut load = vec![0u32; inst.stations.len()];
                self.assign_stations(&members, start, &mut assign, &mut load, out);
            }
        }
    }

    fn assign_stations(&self, members: &[usize], start: f64, assign: &mut Vec<usize>, load: &mut [u32], out: &mut Vec<Leg>) {
        let inst = self.inst;
        if assign.len() == members.len() {
            let used: Vec<usize> = (0..load.len()).filter(|&s| load[s] > 0).collect();
            let dist = inst.station_matrix();
            let m = inst.big_m();
            for tour in used.iter().copied().permutations(used.len()) {
                let mut arrival = vec![0.0; load.len()];
                let mut t = 0.0;
                let mut prev = 0;
                for &s in &tour {
                    t += dist.get(prev, s + 1);
                    prev = s + 1;
                    arrival[s] = start + t;
                }
                let len = t + dist.get(prev, 0);
                if start + len > inst.horizon + EPS {
                    continue;
                }
                let drops: Vec<Drop> = members
                    .iter()
                    .zip(assign.iter())
                    .map(|(&i, &s)| Drop {
                        order: i,
                        option: None,
                        station: Some(s),
                        time: arrival[s],
                    })
                    .collect();
                let gain = drops.iter().map(|d| d.time - m).sum();
                out.push(Leg {
                    start,
                    len,
                    visits: tour.iter().map(|&s| s + 1).collect(),
                    drops,
                    mask: members.iter().fold(0, |acc, &i| acc | (1 << i)),
                    gain,
                });
            }
            return;
        }
        let i = members[assign.len()];
        for &s in &self.feasible[i] {
            if self.usage[s] + load[s] + 1 > inst.stations[s].capacity {
                continue;
            }
            load[s] += 1;
            assign.push(s);
            self.assign_stations(members, start, assign, load, out);
            assign.pop();
            load[s] -= 1;
        }
    }

    fn push(&mut self, leg: Leg) {
        for d in &leg.drops {
            if let Some(s) = d.station {
                self.usage[s] += 1;
            }
        }
        self.legs.push(leg);
    }

    fn pop(&mut self) {
        let leg = self.legs.pop().expect("nonempty");
        for d in &leg.drops {
            if let Some(s) = d.station {
                self.usage[s] -= 1;
            }
        }
    }

    fn key(&self) -> PlanKey {
        let inst = self.inst;
        let mask = self.served_mask();
        let served_ids: Vec<u32> = bits(mask).map(|i| inst.orders[i].id).collect();
        let gain: f64 = self.legs.iter().map(|l| l.gain).sum();
        let objective = match self.kind {
            ModelKind::F3 | ModelKind::F4 => {
                let m = inst.big_m();
                inst.orders.iter().map(|o| m - o.release).sum::<f64>() + gain
            }
            _ => gain,
        };
        PlanKey {
            scores: PlanKey::scores(self.kind, served_ids.len(), objective),
            trips: self.legs.len(),
            dist: self.legs.iter().map(|l| l.len).sum(),
            served_ids,
        }
    }

    fn to_plan(&self) -> Plan {
        let inst = self.inst;
        let mut legs = self.legs.clone();
        if self.kind == ModelKind::F1 {
            // Same trip order, pushed as late as possible.
            let mut end = inst.horizon;
            for leg in legs.iter_mut().rev() {
                let shift = end - leg.len - leg.start;
                leg.start += shift;
                leg.drops.iter_mut().for_each(|d| d.time += shift);
                end = leg.start;
            }
        }
        let station = self.kind.is_station_model();
        let mut trips = Vec::with_capacity(legs.len());
        let mut assignments = Vec::new();
        for (k, leg) in legs.iter().enumerate() {
            let mut route = vec![0];
            route.extend(leg.visits.iter().map(|&v| {
                if station {
                    inst.stations[v - 1].id
                } else {
                    inst.orders[v - 1].id
                }
            }));
            route.push(0);
            trips.push(Trip {
                route,
                start: leg.start,
                end: leg.start + leg.len,
            });
            assignments.extend(leg.drops.iter().map(|d| Assignment {
                order: inst.orders[d.order].id,
                trip: k,
                option: d.option,
                station: d.station.map(|s| inst.stations[s].id),
                delivery_time: d.time,
            }));
        }
        assignments.sort_by_key(|a| a.order);
        let mask = self.served_mask();
        Plan {
            model_kind: self.kind,
            trips,
            assignments,
            unserved: (0..inst.orders.len())
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| inst.orders[i].id)
                .collect(),
        }
    }

    fn consider(&mut self) {
        self.explored += 1;
        let key = self.key();
        if self.best.as_ref().is_some_and(|b| key.cmp(&b.key) != Ordering::Less) {
            return;
        }
        let plan = self.to_plan();
        if validate_plan(self.inst, &plan).is_ok() {
            self.best = Some(Best { key, plan });
        }
    }

    fn descend(&mut self) {
        self.consider();
        if self.legs.len() >= self.max_trips {
            return;
        }
        let n = self.inst.orders.len();
        let free = ((1u64 << n) - 1) as u32 & !self.served_mask();
        let mut set = free;
        let mut opts = Vec::new();
        while set != 0 {
            opts.clear();
            self.next_legs(set, &mut opts);
            for leg in opts.drain(..) {
                self.push(leg);
                self.descend();
                self.pop();
            }
            set = (set - 1) & free;
        }
    }
}

/// Solves `kind` by complete enumeration with the instance's trip bound.
pub fn oracle_solve(inst: &ValidInstance, kind: ModelKind, guard: &OracleGuard) -> Result<SolveReport> {
    oracle_solve_with_trips(inst, kind, guard, inst.max_trips())
}

/// Solves `kind` by complete enumeration with at most `max_trips` trips.
pub fn oracle_solve_with_trips(
    inst: &ValidInstance,
    kind: ModelKind,
    guard: &OracleGuard,
    max_trips: usize,
) -> Result<SolveReport> {
    let started = Instant::now();
    guard.check(inst, kind)?;
    if max_trips == 0 {
        return Err(SddError::Config("max_trips must be at least 1".into()));
    }
    let feasible = if kind.is_station_model() {
        let f = inst.require_stations()?;
        if inst.big_m() < inst.horizon {
            return Err(SddError::Config(format!(
                "big_m {} is below the horizon {}; the unserved penalty must dominate",
                inst.big_m(),
                inst.horizon
            )));
        }
        f
    } else {
        if kind.is_slot_model() {
            inst.require_slots()?;
        }
        Vec::new()
    };

    let mut root = Enumerator::new(inst, kind, max_trips, feasible);
    root.consider();

    // Branch on the first trip in parallel; reduce in enumeration order so
    // ties resolve exactly as a sequential run would.
    let n = inst.orders.len();
    let all = ((1u64 << n) - 1) as u32;
    let mut firsts = Vec::new();
    let mut set = all;
    while set != 0 {
        root.next_legs(set, &mut firsts);
        set = (set - 1) & all;
    }
    let branches: Vec<(Option<Best>, u64)> = firsts
        .into_par_iter()
        .map(|leg| {
            let mut e = root.fork();
            e.push(leg);
            e.descend();
            (e.best, e.explored)
        })
        .collect();

    let mut best = root.best.take();
    let mut explored = root.explored;
    for (b, count) in branches {
        explored += count;
        if let Some(b) = b {
            if best.as_ref().is_none_or(|cur| b.key.cmp(&cur.key) == Ordering::Less) {
                best = Some(b);
            }
        }
    }
    let best = best.ok_or_else(|| SddError::Config("oracle found no valid plan, not even the empty one".into()))?;
    let objective = eval_objective(inst, &best.plan)?;
    let stations = kind
        .is_station_model()
        .then(|| StationPlanExtras::from_plan(inst, &best.plan));
    Ok(SolveReport {
        model_kind: kind,
        objective,
        served: best.plan.num_served(),
        plan: best.plan,
        optimal: true,
        nodes_explored: explored,
        runtime: started.elapsed().as_secs_f64(),
        bound_gap: 0.0,
        stations,
    })
}
