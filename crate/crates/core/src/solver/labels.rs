//! Label-setting dynamic program over served-order subsets.
//!
//! A label is a complete trip sequence serving exactly its subset; orders
//! outside the subset are unserved, so every label is itself a feasible
//! plan. Labels at the same subset are pruned by Pareto dominance on
//! (vehicle free time, cost, trips, distance, station usage): each of these
//! only constrains or worsens what can be appended. Subsets are expanded in
//! order of size, so a subset's label set is final before it is extended.

use crate::plan::EPS;

use super::{Budget, TripDraft};

/// A trip that can be appended to a label.
pub(crate) struct TripOption {
    pub end: f64,
    /// Lower is better.
    pub cost: f64,
    pub dist: f64,
    /// Parcels added per station (empty for customer models).
    pub usage: Vec<u16>,
    pub draft: TripDraft,
}

/// Enumerates the ways of serving exactly `set` in one trip.
pub(crate) trait TripGenerator {
    /// `ready` is when the vehicle is back at the depot; `usage` holds the
    /// parcels already placed per station.
    fn options(&mut self, set: u32, ready: f64, usage: &[u16], out: &mut Vec<TripOption>);
}

#[derive(Clone)]
pub(crate) struct Label {
    pub end: f64,
    pub cost: f64,
    pub trips: usize,
    pub dist: f64,
    pub usage: Vec<u16>,
    node: Option<usize>,
}

struct Node {
    parent: Option<usize>,
    draft: TripDraft,
}

pub(crate) struct LabelOutcome {
    /// Non-dominated labels for each subset mask.
    pub labels: Vec<Vec<Label>>,
    nodes: Vec<Node>,
    pub complete: bool,
}

impl LabelOutcome {
    /// Trips of a label in chronological order.
    pub fn drafts(&self, label: &Label) -> Vec<TripDraft> {
        let mut out = Vec::with_capacity(label.trips);
        let mut cur = label.node;
        while let Some(i) = cur {
            out.push(self.nodes[i].draft.clone());
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Label)> {
        self.labels
            .iter()
            .enumerate()
            .flat_map(|(m, ls)| ls.iter().map(move |l| (m as u32, l)))
    }
}

fn dominates(a: &Label, b: &Label) -> bool {
    a.end <= b.end
        && a.cost <= b.cost
        && a.trips <= b.trips
        && a.dist <= b.dist
        && a.usage.iter().zip(&b.usage).all(|(x, y)| x <= y)
}

fn insert(list: &mut Vec<Label>, cand: Label) -> bool {
    if list.iter().any(|l| dominates(l, &cand)) {
        return false;
    }
    list.retain(|l| !dominates(&cand, l));
    list.push(cand);
    true
}

/// Runs the DP over subsets of `servable` (bitmask over order positions).
pub(crate) fn run<G: TripGenerator>(
    generator: &mut G,
    n: usize,
    servable: u32,
    stations: usize,
    max_trips: usize,
    horizon: f64,
    budget: &mut Budget,
) -> LabelOutcome {
    let size = 1usize << n;
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); size];
    let mut nodes: Vec<Node> = Vec::new();
    labels[0].push(Label {
        end: 0.0,
        cost: 0.0,
        trips: 0,
        dist: 0.0,
        usage: vec![0; stations],
        node: None,
    });

    let mut masks: Vec<u32> = (0..size as u32).filter(|m| m & !servable == 0).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));

    let mut opts = Vec::new();
    'outer: for &mask in &masks {
        if labels[mask as usize].is_empty() {
            continue;
        }
        let free = servable & !mask;
        let current = labels[mask as usize].clone();
        for label in current.iter().filter(|l| l.trips < max_trips) {
            let mut set = free;
            while set != 0 {
                opts.clear();
                generator.options(set, label.end, &label.usage, &mut opts);
                for opt in opts.drain(..) {
                    if !budget.tick() {
                        break 'outer;
                    }
                    if opt.end > horizon + EPS {
                        continue;
                    }
                    let next = Label {
                        end: opt.end,
                        cost: label.cost + opt.cost,
                        trips: label.trips + 1,
                        dist: label.dist + opt.dist,
                        usage: label.usage.iter().zip(&opt.usage).map(|(a, b)| a + b).collect(),
                        node: Some(nodes.len()),
                    };
                    if insert(&mut labels[(mask | set) as usize], next) {
                        nodes.push(Node {
                            parent: label.node,
                            draft: opt.draft,
                        });
                    }
                }
                set = (set - 1) & free;
            }
        }
    }
    LabelOutcome {
        labels,
        nodes,
        complete: !budget.exhausted,
    }
}
