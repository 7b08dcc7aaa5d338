//! Exact solvers for the four delivery models.
//!
//! * [`solve_f1`]: orienteering with release dates (maximize served orders).
//! * [`solve_f2`], [`solve_f2_lex`]: deadline-option selection (maximize
//!   revenue, or served count then revenue).
//! * [`solve_f3`], [`solve_f4`]: pickup-station delivery with direct trips or
//!   routed station tours (minimize total service time).

mod f1;
mod labels;
mod profiles;
mod slots;
mod stations;

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::geometry::DistanceMatrix;
use crate::instance::ValidInstance;
use crate::plan::{Assignment, ModelKind, Plan, Trip};
use crate::tsp::route_length;

pub use f1::solve_f1;
pub use slots::{solve_f2, solve_f2_lex, solve_slots, SlotChoice, SlotSolution};
pub use stations::{solve_f3, solve_f4, StationOrder, StationPlanExtras, StationTrip, StationVisit};

pub(crate) use profiles::{route_profiles, RouteProfile};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverConfig {
    /// Trip bound; the instance's `max_trips` when unset.
    pub max_trips: Option<usize>,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
}

impl SolverConfig {
    pub fn with_max_trips(max_trips: usize) -> Self {
        SolverConfig {
            max_trips: Some(max_trips),
            ..Default::default()
        }
    }

    pub(crate) fn trip_bound(&self, inst: &ValidInstance) -> Result<usize> {
        match self.max_trips {
            Some(0) => Err(SddError::Config("max_trips must be at least 1".into())),
            Some(k) => Ok(k),
            None => Ok(inst.max_trips()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub model_kind: ModelKind,
    pub objective: f64,
    pub served: usize,
    pub plan: Plan,
    pub optimal: bool,
    pub nodes_explored: u64,
    /// Wall-clock seconds.
    pub runtime: f64,
    pub bound_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<StationPlanExtras>,
}

/// Node and wall-clock budget shared by the search routines.
pub(crate) struct Budget {
    started: Instant,
    time_limit: Option<Duration>,
    node_limit: Option<u64>,
    pub nodes: u64,
    pub exhausted: bool,
}

impl Budget {
    pub fn new(cfg: &SolverConfig) -> Self {
        Budget {
            started: Instant::now(),
            time_limit: cfg.time_limit,
            node_limit: cfg.node_limit,
            nodes: 0,
            exhausted: false,
        }
    }

    /// Counts one node; returns `false` once the budget is spent.
    pub fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.node_limit.is_some_and(|l| self.nodes > l) {
            self.exhausted = true;
        }
        if self.nodes % 1024 == 0 && self.time_limit.is_some_and(|l| self.started.elapsed() > l) {
            self.exhausted = true;
        }
        !self.exhausted
    }

    pub fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

const TIE: f64 = 1e-9;

fn cmp_higher(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= TIE * a.abs().max(b.abs()).max(1.0) {
        Ordering::Equal
    } else if a > b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Ranking of a complete candidate plan; `Ordering::Less` means better.
///
/// `scores` are compared first (higher is better, in order), then fewer
/// trips, then shorter distance, then the lexicographically smallest sorted
/// list of served ids.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PlanKey {
    pub scores: [f64; 2],
    pub trips: usize,
    pub dist: f64,
    pub served_ids: Vec<u32>,
}

impl PlanKey {
    pub fn cmp(&self, other: &PlanKey) -> Ordering {
        cmp_higher(self.scores[0], other.scores[0])
            .then_with(|| cmp_higher(self.scores[1], other.scores[1]))
            .then_with(|| self.trips.cmp(&other.trips))
            .then_with(|| cmp_higher(-self.dist, -other.dist))
            .then_with(|| self.served_ids.cmp(&other.served_ids))
    }

    /// Scores for each model from served count and the raw objective
    /// (revenue for slot models, total service time for station models).
    pub fn scores(kind: ModelKind, served: usize, objective: f64) -> [f64; 2] {
        let served = served as f64;
        match kind {
            ModelKind::F1 => [served, 0.0],
            ModelKind::F2 => [objective, 0.0],
            ModelKind::F2Lex => [served, objective],
            ModelKind::F3 | ModelKind::F4 => [-objective, served],
        }
    }
}

/// One trip of a plan under construction, in matrix indices.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TripDraft {
    pub start: f64,
    /// Route interior: order nodes (customer models) or station nodes.
    pub visits: Vec<usize>,
    /// Carried orders: position, option, station position, delivery time.
    pub loads: Vec<Load>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Load {
    pub order: usize,
    pub option: Option<usize>,
    pub station: Option<usize>,
    pub time: f64,
}

/// Converts drafts (chronological) into an id-based plan.
pub(crate) fn build_plan(inst: &ValidInstance, kind: ModelKind, drafts: &[TripDraft]) -> Plan {
    let dist = matrix_for(inst, kind);
    let mut trips = Vec::with_capacity(drafts.len());
    let mut assignments = Vec::new();
    let mut served = vec![false; inst.orders.len()];
    for (k, d) in drafts.iter().enumerate() {
        let mut route = Vec::with_capacity(d.visits.len() + 2);
        route.push(0);
        for &v in &d.visits {
            route.push(if kind.is_station_model() {
                inst.stations[v - 1].id
            } else {
                inst.orders[v - 1].id
            });
        }
        route.push(0);
        trips.push(Trip {
            route,
            start: d.start,
            end: d.start + route_length(dist, &d.visits),
        });
        for l in &d.loads {
            served[l.order] = true;
            assignments.push(Assignment {
                order: inst.orders[l.order].id,
                trip: k,
                option: l.option,
                station: l.station.map(|s| inst.stations[s].id),
                delivery_time: l.time,
            });
        }
    }
    assignments.sort_by_key(|a| a.order);
    Plan {
        model_kind: kind,
        trips,
        assignments,
        unserved: inst
            .orders
            .iter()
            .zip(&served)
            .filter(|(_, s)| !**s)
            .map(|(o, _)| o.id)
            .collect(),
    }
}

pub(crate) fn matrix_for(inst: &ValidInstance, kind: ModelKind) -> &DistanceMatrix {
    if kind.is_station_model() {
        inst.station_matrix()
    } else {
        inst.order_matrix()
    }
}

/// Best option for an order delivered at `time`: the highest willingness to
/// pay among options whose deadline is met, smallest index on ties.
pub(crate) fn best_option(wtp: &[f64], deadlines: &[f64], release: f64, time: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (d, (&u, &dl)) in wtp.iter().zip(deadlines).enumerate() {
        if time <= release + dl + crate::plan::EPS && best.is_none_or(|(_, b)| u > b) {
            best = Some((d, u));
        }
    }
    best
}

/// Refuses instances too large for bitmask-indexed search tables.
pub(crate) fn check_size(what: &'static str, size: usize, limit: usize) -> Result<()> {
    if size > limit {
        Err(SddError::TooLarge { what, size, limit })
    } else {
        Ok(())
    }
}
