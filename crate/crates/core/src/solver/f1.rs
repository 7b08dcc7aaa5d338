//! Depth-first branch-and-bound for the orienteering problem with release
//! dates.
//!
//! Orders are decided one at a time (join an open trip, open a new trip, or
//! stay unserved). Trip routes come from the subset tour table. A partial
//! partition is feasible iff its trips, sorted by latest release and packed
//! back-to-back against the horizon, all start after their releases; adding
//! orders or trips never restores feasibility, so infeasible partials are cut.

use crate::error::Result;
use crate::instance::ValidInstance;
use crate::plan::{ModelKind, EPS};
use crate::tsp::{subset_tour_lengths, tsp_exact};

use super::{build_plan, check_size, Budget, Load, PlanKey, SolveReport, SolverConfig, TripDraft};

/// Largest order count for the subset tour table.
const F1_ORDER_LIMIT: usize = 18;

#[derive(Clone, Copy)]
struct OpenTrip {
    mask: u32,
    release: f64,
}

struct Search<'a> {
    horizon: f64,
    max_trips: usize,
    lengths: &'a [f64],
    /// Candidate orders (bit positions in `lengths`), sorted by release.
    order: Vec<usize>,
    releases: Vec<f64>,
    ids: Vec<u32>,
    budget: Budget,
    best: Option<(PlanKey, Vec<OpenTrip>)>,
    trips: Vec<OpenTrip>,
}

impl Search<'_> {
    fn feasible(&self) -> bool {
        let mut trips: Vec<(f64, f64)> = self
            .trips
            .iter()
            .map(|t| (t.release, self.lengths[t.mask as usize]))
            .collect();
        packs_before_horizon(&mut trips, self.horizon)
    }

    fn key(&self, served: usize) -> PlanKey {
        let mut ids: Vec<u32> = self
            .trips
            .iter()
            .flat_map(|t| bits(t.mask).map(|b| self.ids[b]))
            .collect();
        ids.sort_unstable();
        debug_assert_eq!(ids.len(), served);
        PlanKey {
            scores: PlanKey::scores(ModelKind::F1, served, served as f64),
            trips: self.trips.len(),
            dist: self.trips.iter().map(|t| self.lengths[t.mask as usize]).sum(),
            served_ids: ids,
        }
    }

    /// Whether the subtree can still beat the incumbent.
    fn promising(&self, served: usize, depth: usize) -> bool {
        let Some((best, _)) = &self.best else {
            return true;
        };
        let best_served = best.scores[0] as usize;
        let ub = served + (self.order.len() - depth);
        if ub < best_served {
            return false;
        }
        if ub == best_served {
            let dist: f64 = self.trips.iter().map(|t| self.lengths[t.mask as usize]).sum();
            if self.trips.len() > best.trips || (self.trips.len() == best.trips && dist > best.dist + EPS) {
                return false;
            }
        }
        true
    }

    fn dfs(&mut self, depth: usize, served: usize) {
        if !self.budget.tick() {
            return;
        }
        if depth == self.order.len() {
            let key = self.key(served);
            if self.best.as_ref().is_none_or(|(b, _)| key.cmp(b).is_lt()) {
                self.best = Some((key, self.trips.clone()));
            }
            return;
        }
        if !self.promising(served, depth) {
            return;
        }
        let o = self.order[depth];
        let bit = 1u32 << o;
        let r = self.releases[o];

        for j in 0..self.trips.len() {
            let saved = self.trips[j];
            self.trips[j] = OpenTrip {
                mask: saved.mask | bit,
                release: saved.release.max(r),
            };
            if self.feasible() {
                self.dfs(depth + 1, served + 1);
            }
            self.trips[j] = saved;
            if self.budget.exhausted {
                return;
            }
        }
        if self.trips.len() < self.max_trips {
            self.trips.push(OpenTrip { mask: bit, release: r });
            if self.feasible() {
                self.dfs(depth + 1, served + 1);
            }
            self.trips.pop();
            if self.budget.exhausted {
                return;
            }
        }
        self.dfs(depth + 1, served);
    }
}

/// `(release, length)` pairs; true iff the back-to-back schedule ending at
/// the horizon respects every release and starts at or after 0. Sorts by
/// release.
pub(crate) fn packs_before_horizon(trips: &mut [(f64, f64)], horizon: f64) -> bool {
    trips.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = horizon;
    for &(release, len) in trips.iter().rev() {
        start -= len;
        if start < release - EPS {
            return false;
        }
    }
    start >= -EPS
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |b| mask & (1 << b) != 0)
}

/// Maximizes the number of served orders.
///
/// Ties go to fewer trips, then shorter total distance, then the
/// lexicographically smallest served-id list. The returned plan is
/// canonical: trips run back-to-back and the last one ends at the horizon.
pub fn solve_f1(inst: &ValidInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let max_trips = cfg.trip_bound(inst)?;
    let n = inst.orders.len();
    let horizon = inst.horizon;

    // Orders that fit alone; the others can never be served.
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| inst.orders[i].release + inst.order_round_trip(i) <= horizon + EPS)
        .collect();
    check_size("F1 candidate orders", candidates.len(), F1_ORDER_LIMIT)?;
    candidates.sort_by(|&a, &b| {
        inst.orders[a]
            .release
            .total_cmp(&inst.orders[b].release)
            .then(a.cmp(&b))
    });

    let nodes: Vec<usize> = candidates.iter().map(|&i| i + 1).collect();
    let lengths = subset_tour_lengths(inst.order_matrix(), &nodes)?;
    let mut search = Search {
        horizon,
        max_trips,
        lengths: &lengths,
        order: (0..candidates.len()).collect(),
        releases: candidates.iter().map(|&i| inst.orders[i].release).collect(),
        ids: candidates.iter().map(|&i| inst.orders[i].id).collect(),
        budget: Budget::new(cfg),
        best: None,
        trips: Vec::new(),
    };
    search.dfs(0, 0);

    let (key, trips) = search.best.clone().unwrap_or_else(|| {
        (
            PlanKey {
                scores: [0.0, 0.0],
                trips: 0,
                dist: 0.0,
                served_ids: Vec::new(),
            },
            Vec::new(),
        )
    });

    // Canonical schedule: sort by release, pack backwards from the horizon.
    let mut drafts: Vec<(f64, usize, Vec<usize>, f64)> = Vec::new();
    for t in &trips {
        let members: Vec<usize> = bits(t.mask).map(|b| candidates[b] + 1).collect();
        let tour = tsp_exact(inst.order_matrix(), &members)?;
        let first_id = members.iter().map(|&v| inst.orders[v - 1].id).min().unwrap_or(0);
        drafts.push((t.release, first_id as usize, tour.nodes, tour.length));
    }
    drafts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut end = horizon;
    let mut out = vec![
        TripDraft {
            start: 0.0,
            visits: Vec::new(),
            loads: Vec::new()
        };
        drafts.len()
    ];
    for (k, (_, _, visits, len)) in drafts.iter().enumerate().rev() {
        let start = end - len;
        out[k] = draft_with_arrivals(inst, start, visits.clone());
        end = start;
    }

    let served = key.served_ids.len();
    let plan = build_plan(inst, ModelKind::F1, &out);
    let optimal = !search.budget.exhausted;
    Ok(SolveReport {
        model_kind: ModelKind::F1,
        objective: served as f64,
        served,
        plan,
        optimal,
        nodes_explored: search.budget.nodes,
        runtime: search.budget.elapsed(),
        bound_gap: if optimal {
            0.0
        } else {
            (candidates.len() - served) as f64
        },
        stations: None,
    })
}

/// Draft for a customer trip with delivery times at the earliest arrivals.
pub(crate) fn draft_with_arrivals(inst: &ValidInstance, start: f64, visits: Vec<usize>) -> TripDraft {
    let dist = inst.order_matrix();
    let mut t = start;
    let mut prev = 0;
    let loads = visits
        .iter()
        .map(|&v| {
            t += dist.get(prev, v);
            prev = v;
            Load {
                order: v - 1,
                option: None,
                station: None,
                time: t,
            }
        })
        .collect();
    TripDraft { start, visits, loads }
}
