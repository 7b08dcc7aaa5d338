//! Non-dominated route profiles for every subset of a node list.
//!
//! When arrival times matter (deadlines, pickup times) the shortest tour is
//! not always best, so a trip keeps every route whose length and per-node
//! arrival offsets are not all beaten by another route over the same nodes.
//! Profiles are grown by a Held-Karp style DP over `(subset, last node)`
//! states; a dominated partial path can never lead to a better route.

use crate::error::Result;
use crate::geometry::DistanceMatrix;

use super::check_size;

const PROFILE_NODE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RouteProfile {
    /// Matrix indices in visiting order.
    pub nodes: Vec<usize>,
    pub len: f64,
    /// Arrival offset from the trip start, indexed by bit position; entries
    /// for bits outside the subset are unused.
    pub offsets: Vec<f64>,
}

#[derive(Clone)]
struct Partial {
    time: f64,
    offsets: Vec<f64>,
    seq: Vec<u8>,
}

fn dominates(a: &[f64], a_time: f64, b: &[f64], b_time: f64, mask: usize) -> bool {
    if a_time > b_time {
        return false;
    }
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        if a[i] > b[i] {
            return false;
        }
    }
    true
}

fn insert(list: &mut Vec<Partial>, cand: Partial, mask: usize) {
    if list
        .iter()
        .any(|p| dominates(&p.offsets, p.time, &cand.offsets, cand.time, mask))
    {
        return;
    }
    list.retain(|p| !dominates(&cand.offsets, cand.time, &p.offsets, p.time, mask));
    list.push(cand);
}

/// Profiles for every subset of `nodes`, indexed by bitmask.
///
/// A partial path is dropped once the arrival offset at bit `i` exceeds
/// `max_offset[i]`, or once returning to the depot would make the route
/// longer than `max_len[i]` for some visited bit `i`. Subsets with no
/// surviving route get an empty list.
pub(crate) fn route_profiles(
    dist: &DistanceMatrix,
    nodes: &[usize],
    max_offset: &[f64],
    max_len: &[f64],
) -> Result<Vec<Vec<RouteProfile>>> {
    let k = nodes.len();
    check_size("route profile nodes", k, PROFILE_NODE_LIMIT)?;
    let size = 1usize << k;
    let mut len_cap = vec![f64::INFINITY; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        len_cap[mask] = len_cap[mask & (mask - 1)].min(max_len[low]);
    }
    let mut paths: Vec<Vec<Vec<Partial>>> = vec![vec![Vec::new(); k]; size];
    for j in 0..k {
        let t = dist.get(0, nodes[j]);
        if t <= max_offset[j] && 2.0 * t <= len_cap[1 << j] {
            let mut offsets = vec![f64::INFINITY; k];
            offsets[j] = t;
            paths[1 << j][j].push(Partial {
                time: t,
                offsets,
                seq: vec![j as u8],
            });
        }
    }
    for mask in 1..size {
        for last in 0..k {
            if mask & (1 << last) == 0 || paths[mask][last].is_empty() {
                continue;
            }
            let from = std::mem::take(&mut paths[mask][last]);
            for nxt in 0..k {
                if mask & (1 << nxt) != 0 {
                    continue;
                }
                let step = dist.get(nodes[last], nodes[nxt]);
                let nmask = mask | (1 << nxt);
                for p in &from {
                    let t = p.time + step;
                    if t > max_offset[nxt] || t + dist.get(nodes[nxt], 0) > len_cap[nmask] {
                        continue;
                    }
                    let mut offsets = p.offsets.clone();
                    offsets[nxt] = t;
                    let mut seq = p.seq.clone();
                    seq.push(nxt as u8);
                    insert(&mut paths[nmask][nxt], Partial { time: t, offsets, seq }, nmask);
                }
            }
            paths[mask][last] = from;
        }
    }

    let mut out = vec![Vec::new(); size];
    for (mask, slot) in out.iter_mut().enumerate().skip(1) {
        let mut closed: Vec<Partial> = Vec::new();
        for last in 0..k {
            for p in &paths[mask][last] {
                let mut c = p.clone();
                c.time += dist.get(nodes[last], 0);
                insert(&mut closed, c, mask);
            }
        }
        closed.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.seq.cmp(&b.seq)));
        *slot = closed
            .into_iter()
            .map(|p| RouteProfile {
                nodes: p.seq.iter().map(|&b| nodes[b as usize]).collect(),
                len: p.time,
                offsets: p.offsets,
            })
            .collect();
    }
    Ok(out)
}
