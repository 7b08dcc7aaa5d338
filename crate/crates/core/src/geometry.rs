//! Planar locations and Euclidean travel matrices.
//!
//! Time and distance share one unit: a vehicle covers one distance unit per
//! time unit, so every matrix entry doubles as a travel time.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};

/// Boundary slack used for inclusive radius and triangle checks.
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Square symmetric matrix of travel distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    /// Returns the first triple `(u, v, w)` with `d[u][w] > d[u][v] + d[v][w] + tol`.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        for u in 0..self.n {
            for v in 0..self.n {
                for w in 0..self.n {
                    if self.get(u, w) > self.get(u, v) + self.get(v, w) + tol {
                        return Some((u, v, w));
                    }
                }
            }
        }
        None
    }
}

/// Builds the Euclidean distance matrix over `points`.
pub fn distance_matrix(points: &[Location]) -> Result<DistanceMatrix> {
    if points.is_empty() {
        return Err(SddError::Config("distance matrix needs at least one point".into()));
    }
    if let Some(p) = points.iter().position(|p| !p.is_finite()) {
        return Err(SddError::Malformed(format!("point {p} has a non-finite coordinate")));
    }
    let n = points.len();
    let mut data = vec![0.0; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = points[u].dist(&points[v]);
            data[u * n + v] = d;
            data[v * n + u] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Ids of the stations within `radius` of `customer`, ascending.
pub fn feasible_stations<'a, I>(customer: &Location, stations: I, radius: f64) -> Vec<u32>
where
    I: IntoIterator<Item = (u32, &'a Location)>,
{
    let mut ids: Vec<u32> = stations
        .into_iter()
        .filter(|(_, loc)| customer.dist(loc) <= radius + BOUNDARY_SLACK)
        .map(|(id, _)| id)
        .collect();
    ids.sort_unstable();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let m = distance_matrix(&[Location::new(0.0, 0.0), Location::new(3.0, 4.0)]).unwrap();
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let err = distance_matrix(&[Location::new(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, SddError::Malformed(_)));
        assert!(distance_matrix(&[]).is_err());
    }

    #[test]
    fn radius_is_inclusive_and_strict_beyond() {
        let a = Location::new(3.0, 4.0);
        assert_eq!(feasible_stations(&a, [(7, &a)], 0.0), vec![7]);

        let c = Location::new(0.0, 0.0);
        let far = Location::new(31.0, 0.0);
        let near = Location::new(29.0, 0.0);
        assert_eq!(feasible_stations(&c, [(1, &far), (2, &near)], 30.0), vec![2]);
    }
}
