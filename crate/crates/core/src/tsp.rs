//! Exact depot-rooted tours by Held-Karp dynamic programming.
//!
//! Nodes are indices into a [`DistanceMatrix`] whose node 0 is the depot.
//! Index order follows id order everywhere in the crate, so the
//! lexicographic tie-break on indices is the same as on ids.

use crate::error::{Result, SddError};
use crate::geometry::DistanceMatrix;

/// Default largest subset handled by [`tsp_exact`].
pub const HELD_KARP_LIMIT: usize = 14;

const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub length: f64,
    /// Interior nodes in visiting order (depot excluded at both ends).
    pub nodes: Vec<usize>,
}

/// Length of the closed walk `0 -> interior... -> 0`.
pub fn route_length(dist: &DistanceMatrix, interior: &[usize]) -> f64 {
    let mut prev = 0;
    let mut len = 0.0;
    for &v in interior {
        len += dist.get(prev, v);
        prev = v;
    }
    len + dist.get(prev, 0)
}

/// Shortest tour over `nodes`, lexicographically smallest among ties.
pub fn tsp_exact(dist: &DistanceMatrix, nodes: &[usize]) -> Result<Tour> {
    tsp_exact_with_limit(dist, nodes, HELD_KARP_LIMIT)
}

pub fn tsp_exact_with_limit(dist: &DistanceMatrix, nodes: &[usize], limit: usize) -> Result<Tour> {
    if nodes.len() > limit {
        return Err(SddError::TooLarge {
            what: "tour subset",
            size: nodes.len(),
            limit,
        });
    }
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.iter().any(|&v| v == 0 || v >= dist.len()) {
        return Err(SddError::Config("tour nodes must be non-depot matrix indices".into()));
    }
    let k = nodes.len();
    if k == 0 {
        return Ok(Tour {
            length: 0.0,
            nodes: Vec::new(),
        });
    }

    // rest[mask * k + j]: shortest path from nodes[j] through every node of
    // `mask` (j not in mask) and back to the depot.
    let full = (1usize << k) - 1;
    let mut rest = vec![f64::INFINITY; (full + 1) * k];
    for j in 0..k {
        rest[j] = dist.get(nodes[j], 0);
    }
    for mask in 1..=full {
        for j in 0..k {
            if mask & (1 << j) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut m = mask;
            while m != 0 {
                let nxt = m.trailing_zeros() as usize;
                m &= m - 1;
                let c = dist.get(nodes[j], nodes[nxt]) + rest[(mask & !(1 << nxt)) * k + nxt];
                if c < best {
                    best = c;
                }
            }
            rest[mask * k + j] = best;
        }
    }

    let total = (0..k)
        .map(|j| dist.get(0, nodes[j]) + rest[(full & !(1 << j)) * k + j])
        .fold(f64::INFINITY, f64::min);

    // Greedy reconstruction picking the smallest feasible next node.
    let mut tour = Vec::with_capacity(k);
    let mut remaining = full;
    let mut target = total;
    let mut cur = 0usize;
    while remaining != 0 {
        let mut chosen = None;
        for j in 0..k {
            if remaining & (1 << j) == 0 {
                continue;
            }
            let after = remaining & !(1 << j);
            let c = dist.get(cur, nodes[j]) + rest[after * k + j];
            if c <= target + TIE_TOL * target.max(1.0) {
                chosen = Some((j, after, rest[after * k + j]));
                break;
            }
        }
        let (j, after, r) = chosen.expect("optimal continuation exists");
        tour.push(nodes[j]);
        cur = nodes[j];
        remaining = after;
        target = r;
    }
    Ok(Tour {
        length: route_length(dist, &tour),
        nodes: tour,
    })
}

/// Optimal tour length for every subset of `nodes`, indexed by bitmask
/// (bit `b` selects `nodes[b]`). Entry 0 is 0.
pub fn subset_tour_lengths(dist: &DistanceMatrix, nodes: &[usize]) -> Result<Vec<f64>> {
    let k = nodes.len();
    if k > 20 {
        return Err(SddError::TooLarge {
            what: "subset tour table",
            size: k,
            limit: 20,
        });
    }
    let full = (1usize << k).saturating_sub(1);
    // path[mask * k + j]: shortest depot path covering `mask`, ending at j.
    let mut path = vec![f64::INFINITY; (full + 1) * k.max(1)];
    let mut out = vec![0.0; full + 1];
    for mask in 1..=full {
        let mut best = f64::INFINITY;
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            let prev = mask & !(1 << j);
            let v = if prev == 0 {
                dist.get(0, nodes[j])
            } else {
                let mut b = f64::INFINITY;
                let mut p = prev;
                while p != 0 {
                    let i = p.trailing_zeros() as usize;
                    p &= p - 1;
                    let c = path[prev * k + i] + dist.get(nodes[i], nodes[j]);
                    if c < b {
                        b = c;
                    }
                }
                b
            };
            path[mask * k + j] = v;
            let closed = v + dist.get(nodes[j], 0);
            if closed < best {
                best = closed;
            }
        }
        out[mask] = best;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance_matrix, Location};

    fn matrix(pts: &[(f64, f64)]) -> DistanceMatrix {
        let mut all = vec![Location::new(0.0, 0.0)];
        all.extend(pts.iter().map(|&(x, y)| Location::new(x, y)));
        distance_matrix(&all).unwrap()
    }

    #[test]
    fn single_node() {
        let d = matrix(&[(3.0, 4.0)]);
        let t = tsp_exact(&d, &[1]).unwrap();
        assert_eq!(t.length, 10.0);
        assert_eq!(t.nodes, vec![1]);
    }

    #[test]
    fn collinear_prefers_lexicographic_direction() {
        let d = matrix(&[(10.0, 0.0), (20.0, 0.0)]);
        let t = tsp_exact(&d, &[2, 1]).unwrap();
        assert_eq!(t.length, 40.0);
        assert_eq!(t.nodes, vec![1, 2]);
    }

    #[test]
    fn empty_subset_and_limits() {
        let d = matrix(&[(1.0, 1.0)]);
        assert_eq!(tsp_exact(&d, &[]).unwrap().length, 0.0);
        assert!(matches!(
            tsp_exact_with_limit(&d, &[1], 0),
            Err(SddError::TooLarge { .. })
        ));
        assert!(tsp_exact(&d, &[0]).is_err());
    }

    #[test]
    fn subset_table_matches_single_calls() {
        let d = matrix(&[(5.0, 1.0), (-3.0, 7.0), (2.0, -6.0), (9.0, 9.0)]);
        let nodes = [1, 2, 3, 4];
        let table = subset_tour_lengths(&d, &nodes).unwrap();
        for mask in 0..16usize {
            let sub: Vec<usize> = (0..4).filter(|b| mask & (1 << b) != 0).map(|b| nodes[b]).collect();
            let t = tsp_exact(&d, &sub).unwrap();
            assert!((t.length - table[mask]).abs() < 1e-9);
        }
    }
}
