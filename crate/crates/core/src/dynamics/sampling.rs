//! Release-date sampling, unconditional and conditional on "not yet".

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::{ReleaseDist, ValidInstance};

/// Realized release time per order position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub releases: Vec<f64>,
}

fn dist_of(inst: &ValidInstance, pos: usize) -> Result<&ReleaseDist> {
    inst.orders[pos]
        .release_dist
        .as_ref()
        .ok_or_else(|| SddError::MissingData(format!("order {} has no release distribution", inst.orders[pos].id)))
}

/// One independent draw per order, in order-position order.
pub fn sample_scenario<R: Rng + ?Sized>(inst: &ValidInstance, rng: &mut R) -> Result<Scenario> {
    let releases = (0..inst.orders.len())
        .map(|i| Ok(sample(dist_of(inst, i)?, rng)))
        .collect::<Result<_>>()?;
    Ok(Scenario { releases })
}

pub fn sample<R: Rng + ?Sized>(dist: &ReleaseDist, rng: &mut R) -> f64 {
    match *dist {
        ReleaseDist::Point { t } => t,
        ReleaseDist::Uniform { lo, hi } => {
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        }
        ReleaseDist::Discrete { ref points } => pick(points, rng),
    }
}

fn pick<R: Rng + ?Sized>(atoms: &[(f64, f64)], rng: &mut R) -> f64 {
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut u = rng.gen::<f64>() * total;
    for &(t, p) in atoms {
        if u < p {
            return t;
        }
        u -= p;
    }
    atoms.last().map_or(0.0, |a| a.0)
}

/// Draw conditional on the release being later than `now`. When the
/// distribution has no mass after `now` the order is taken to release at
/// `now`.
pub fn sample_after<R: Rng + ?Sized>(dist: &ReleaseDist, now: f64, rng: &mut R) -> f64 {
    match *dist {
        ReleaseDist::Point { t } => t.max(now),
        ReleaseDist::Uniform { lo, hi } => {
            if hi <= now {
                now
            } else {
                let lo = lo.max(now);
                if hi > lo {
                    rng.gen_range(lo..=hi)
                } else {
                    hi
                }
            }
        }
        ReleaseDist::Discrete { ref points } => {
            let later: Vec<(f64, f64)> = points.iter().copied().filter(|a| a.0 > now).collect();
            if later.is_empty() {
                now
            } else {
                pick(&later, rng)
            }
        }
    }
}

/// Mean release conditional on being later than `now`, with the same
/// boundary convention as [`sample_after`].
pub fn mean_after(dist: &ReleaseDist, now: f64) -> f64 {
    match *dist {
        ReleaseDist::Point { t } => t.max(now),
        ReleaseDist::Uniform { lo, hi } => {
            if hi <= now {
                now
            } else {
                (lo.max(now) + hi) / 2.0
            }
        }
        ReleaseDist::Discrete { ref points } => {
            let (mass, sum) = points
                .iter()
                .filter(|a| a.0 > now)
                .fold((0.0, 0.0), |(m, s), &(t, p)| (m + p, s + t * p));
            if mass > 0.0 {
                sum / mass
            } else {
                now
            }
        }
    }
}
