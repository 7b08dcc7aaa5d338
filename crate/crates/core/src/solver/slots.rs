//! Deadline-option selection with revenue maximization, and the
//! hierarchical variant that maximizes served orders before revenue.
//!
//! Prices equal willingness to pay, so the provider picks, for each served
//! order, the highest-paying option whose deadline the route meets. Trips
//! start as early as possible: later starts never help a deadline.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::ValidInstance;
use crate::plan::{ModelKind, EPS};

use super::labels::{self, TripGenerator, TripOption};
use super::{best_option, build_plan, check_size, route_profiles, Budget, Load, PlanKey, RouteProfile};
use super::{SolveReport, SolverConfig, TripDraft};

const SLOT_ORDER_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotChoice {
    pub order: u32,
    /// Index into the deadline options.
    pub option: usize,
    pub deadline: f64,
    /// Charged price, equal to the willingness to pay for the option.
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSolution {
    #[serde(flatten)]
    pub report: SolveReport,
    pub choices: Vec<SlotChoice>,
}

impl SlotSolution {
    pub fn revenue(&self) -> f64 {
        self.choices.iter().map(|c| c.price).sum()
    }
}

struct SlotTrips<'a> {
    inst: &'a ValidInstance,
    /// Order position for each bit.
    orders: Vec<usize>,
    /// Bit for each order node (matrix index).
    bit_of: Vec<usize>,
    profiles: Vec<Vec<RouteProfile>>,
}

impl TripGenerator for SlotTrips<'_> {
    fn options(&mut self, set: u32, ready: f64, _usage: &[u16], out: &mut Vec<TripOption>) {
        let inst = self.inst;
        let deadlines = &inst.options.as_ref().expect("checked").deadlines;
        let members: Vec<usize> = (0..self.orders.len()).filter(|b| set & (1 << b) != 0).collect();
        let start = members
            .iter()
            .map(|&b| inst.orders[self.orders[b]].release)
            .fold(ready, f64::max);
        'route: for p in &self.profiles[set as usize] {
            let mut revenue = 0.0;
            let mut loads = Vec::with_capacity(members.len());
            for &node in &p.nodes {
                let pos = node - 1;
                let b = self.bit_of[node];
                let o = &inst.orders[pos];
                let time = start + p.offsets[b];
                let Some((option, price)) =
                    best_option(o.wtp.as_ref().expect("checked"), deadlines, o.release, time)
                else {
                    continue 'route;
                };
                revenue += price;
                loads.push(Load {
                    order: pos,
                    option: Some(option),
                    station: None,
                    time,
                });
            }
            out.push(TripOption {
                end: start + p.len,
                cost: -revenue,
                dist: p.len,
                usage: Vec::new(),
                draft: TripDraft {
                    start,
                    visits: p.nodes.clone(),
                    loads,
                },
            });
        }
    }
}

/// Solves both slot objectives in one pass: `(revenue-first, served-first)`.
pub fn solve_slots(inst: &ValidInstance, cfg: &SolverConfig) -> Result<(SlotSolution, SlotSolution)> {
    let opts = inst.require_slots()?;
    let max_deadline = *opts.deadlines.last().expect("validated nonempty");
    let max_trips = cfg.trip_bound(inst)?;
    let mut budget = Budget::new(cfg);

    // An order is servable alone if its round trip fits the horizon and its
    // loosest deadline can be met by a direct visit.
    let servable: Vec<usize> = (0..inst.orders.len())
        .filter(|&i| {
            let o = &inst.orders[i];
            let leg = inst.order_matrix().get(0, i + 1);
            o.release + 2.0 * leg <= inst.horizon + EPS && leg <= max_deadline + EPS
        })
        .collect();
    check_size("F2 servable orders", servable.len(), SLOT_ORDER_LIMIT)?;

    let nodes: Vec<usize> = servable.iter().map(|&i| i + 1).collect();
    let caps = vec![max_deadline + EPS; servable.len()];
    // A trip starts no earlier than its latest release.
    let max_len: Vec<f64> = servable
        .iter()
        .map(|&i| inst.horizon - inst.orders[i].release + EPS)
        .collect();
    let profiles = route_profiles(inst.order_matrix(), &nodes, &caps, &max_len)?;
    let mut bit_of = vec![usize::MAX; inst.orders.len() + 1];
    for (b, &i) in servable.iter().enumerate() {
        bit_of[i + 1] = b;
    }
    let mut generator = SlotTrips {
        inst,
        orders: servable.clone(),
        bit_of,
        profiles,
    };
    let k = servable.len();
    let outcome = labels::run(
        &mut generator,
        k,
        ((1u64 << k) - 1) as u32,
        0,
        max_trips,
        inst.horizon,
        &mut budget,
    );

    let upper: f64 = servable
        .iter()
        .map(|&i| {
            inst.orders[i]
                .wtp
                .as_ref()
                .expect("checked")
                .iter()
                .copied()
                .fold(0.0, f64::max)
        })
        .sum();

    let pick = |kind: ModelKind| -> SlotSolution {
        let mut best: Option<(PlanKey, &labels::Label)> = None;
        for (mask, label) in outcome.iter() {
            let mut ids: Vec<u32> = (0..k)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| inst.orders[servable[b]].id)
                .collect();
            ids.sort_unstable();
            let key = PlanKey {
                scores: PlanKey::scores(kind, ids.len(), -label.cost),
                trips: label.trips,
                dist: label.dist,
                served_ids: ids,
            };
            if best.as_ref().is_none_or(|(b, _)| key.cmp(b).is_lt()) {
                best = Some((key, label));
            }
        }
        let (key, label) = best.expect("empty label always present");
        let drafts = outcome.drafts(label);
        let plan = build_plan(inst, kind, &drafts);
        let revenue = -label.cost;
        let optimal = outcome.complete;
        let choices = plan
            .assignments
            .iter()
            .map(|a| {
                let o = &inst.orders[inst.order_pos(a.order).expect("known")];
                let d = a.option.expect("slot plan");
                SlotChoice {
                    order: a.order,
                    option: d,
                    deadline: opts.deadlines[d],
                    price: o.wtp.as_ref().expect("checked")[d],
                }
            })
            .collect();
        SlotSolution {
            report: SolveReport {
                model_kind: kind,
                objective: revenue,
                served: key.served_ids.len(),
                plan,
                optimal,
                nodes_explored: budget.nodes,
                runtime: budget.elapsed(),
                bound_gap: if optimal { 0.0 } else { (upper - revenue).max(f64::MIN_POSITIVE) },
                stations: None,
            },
            choices,
        }
    };
    Ok((pick(ModelKind::F2), pick(ModelKind::F2Lex)))
}

/// Maximizes revenue from the selected deadline options.
pub fn solve_f2(inst: &ValidInstance, cfg: &SolverConfig) -> Result<SlotSolution> {
    solve_slots(inst, cfg).map(|(rev, _)| rev)
}

/// Maximizes served orders, then revenue.
pub fn solve_f2_lex(inst: &ValidInstance, cfg: &SolverConfig) -> Result<SlotSolution> {
    solve_slots(inst, cfg).map(|(_, lex)| lex)
}
