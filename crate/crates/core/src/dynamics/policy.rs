//! Dispatch policies. Each one looks at the idle vehicle at an epoch and
//! either waits or sends out a set of released orders.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::{Instance, Order, ValidInstance};
use crate::plan::EPS;
use crate::solver::{solve_f1, SolveReport, SolverConfig};

use super::sampling::{mean_after, sample_after};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Wait,
    /// Order ids to deliver in one trip, sorted.
    Dispatch(Vec<u32>),
}

/// What a policy sees at an epoch: the vehicle is idle at the depot.
#[derive(Debug, Clone)]
pub struct EpochState<'a> {
    pub inst: &'a ValidInstance,
    pub time: f64,
    pub grid_step: f64,
    /// Released, undelivered order positions.
    pub released: Vec<usize>,
    /// Unreleased, undelivered order positions.
    pub pending: Vec<usize>,
}

impl EpochState<'_> {
    pub fn remaining(&self) -> f64 {
        self.inst.horizon - self.time
    }

    /// Deterministic problem over the rest of the day, with time shifted so
    /// that `time` becomes 0. Released orders get release 0; pending ones
    /// get `pending_releases[j] - time` (absolute guesses, one per entry of
    /// `pending`). Returns `None` once no time is left.
    pub fn subproblem(&self, pending_releases: Option<&[f64]>) -> Result<Option<ValidInstance>> {
        if self.remaining() <= EPS {
            return Ok(None);
        }
        let mut sub = Instance::new(self.remaining());
        sub.depot = self.inst.depot;
        let order = |pos: usize, release: f64| {
            let o = &self.inst.orders[pos];
            Order::new(o.id, o.loc.x, o.loc.y, release)
        };
        sub.orders.extend(self.released.iter().map(|&p| order(p, 0.0)));
        if let Some(guess) = pending_releases {
            sub.orders.extend(
                self.pending
                    .iter()
                    .zip(guess)
                    .map(|(&p, &r)| order(p, (r - self.time).max(0.0))),
            );
        }
        sub.validate().map(Some)
    }

    fn is_released(&self, id: u32) -> bool {
        self.released.iter().any(|&p| self.inst.orders[p].id == id)
    }

    /// First action of a plan for a subproblem: dispatch its first trip if
    /// every order on it is already released, otherwise wait.
    pub fn first_action(&self, report: &SolveReport) -> Decision {
        let mut ids: Vec<u32> = report
            .plan
            .assignments
            .iter()
            .filter(|a| a.trip == 0)
            .map(|a| a.order)
            .collect();
        ids.sort_unstable();
        if !ids.is_empty() && ids.iter().all(|&id| self.is_released(id)) {
            Decision::Dispatch(ids)
        } else {
            Decision::Wait
        }
    }

    fn solve(&self, pending_releases: Option<&[f64]>) -> Result<Option<SolveReport>> {
        match self.subproblem(pending_releases)? {
            Some(sub) => solve_f1(&sub, &SolverConfig::default()).map(Some),
            None => Ok(None),
        }
    }

    fn release_dist(&self, pos: usize) -> Result<&crate::instance::ReleaseDist> {
        let o = &self.inst.orders[pos];
        o.release_dist
            .as_ref()
            .ok_or_else(|| SddError::MissingData(format!("order {} has no release distribution", o.id)))
    }
}

/// A rule choosing what to do at an epoch.
pub trait DispatchRule {
    fn decide(&self, state: &EpochState<'_>, rng: &mut ChaCha8Rng) -> Result<Decision>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    /// Serve as many released orders as possible, starting now.
    Myopic,
    /// Myopic, but wait while fewer than `theta` orders are released unless
    /// waiting one more epoch would strand a released order.
    Threshold { theta: usize },
    /// Replan with unreleased orders at their conditional mean release.
    Expected,
    /// Sample `samples` futures, replan each and follow the most common
    /// first action.
    Consensus { samples: usize },
}

impl Policy {
    pub fn check(&self) -> Result<()> {
        match *self {
            Policy::Threshold { theta: 0 } => Err(SddError::Config("threshold theta must be positive".into())),
            Policy::Consensus { samples: 0 } => Err(SddError::Config("consensus needs at least one sample".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Myopic => write!(f, "myopic"),
            Policy::Threshold { theta } => write!(f, "threshold:{theta}"),
            Policy::Expected => write!(f, "expected"),
            Policy::Consensus { samples } => write!(f, "consensus:{samples}"),
        }
    }
}

impl FromStr for Policy {
    type Err = SddError;

    /// `myopic`, `threshold[:N]`, `expected`, `consensus[:S]`; the
    /// parameter defaults to 2 for threshold and 16 for consensus.
    fn from_str(s: &str) -> Result<Policy> {
        let lower = s.to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let num = |default: usize| -> Result<usize> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| SddError::Config(format!("bad policy parameter in {s:?}")))
            })
        };
        let p = match name {
            "myopic" if arg.is_none() => Policy::Myopic,
            "threshold" => Policy::Threshold { theta: num(2)? },
            "expected" | "expectedvalue" if arg.is_none() => Policy::Expected,
            "consensus" => Policy::Consensus { samples: num(16)? },
            _ => return Err(SddError::Config(format!("unknown policy {s:?}"))),
        };
        p.check()?;
        Ok(p)
    }
}

fn myopic(state: &EpochState<'_>) -> Result<Decision> {
    if state.released.is_empty() {
        return Ok(Decision::Wait);
    }
    Ok(match state.solve(None)? {
        Some(rep) => state.first_action(&rep),
        None => Decision::Wait,
    })
}

impl DispatchRule for Policy {
    fn decide(&self, state: &EpochState<'_>, rng: &mut ChaCha8Rng) -> Result<Decision> {
        match *self {
            Policy::Myopic => myopic(state),
            Policy::Threshold { theta } => {
                if state.released.len() >= theta {
                    return myopic(state);
                }
                let later = state.time + state.grid_step;
                let stranded = state.released.iter().any(|&p| {
                    let trip = state.inst.order_round_trip(p);
                    state.time + trip <= state.inst.horizon + EPS && later + trip > state.inst.horizon + EPS
                });
                if stranded {
                    myopic(state)
                } else {
                    Ok(Decision::Wait)
                }
            }
            Policy::Expected => {
                let guess = state
                    .pending
                    .iter()
                    .map(|&p| Ok(mean_after(state.release_dist(p)?, state.time)))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(match state.solve(Some(&guess))? {
                    Some(rep) => state.first_action(&rep),
                    None => Decision::Wait,
                })
            }
            Policy::Consensus { samples } => {
                // (count, objective sum) per first action.
                let mut votes: HashMap<Decision, (usize, f64)> = HashMap::new();
                for _ in 0..samples {
                    let draw = state
                        .pending
                        .iter()
                        .map(|&p| Ok(sample_after(state.release_dist(p)?, state.time, rng)))
                        .collect::<Result<Vec<f64>>>()?;
                    let (action, value) = match state.solve(Some(&draw))? {
                        Some(rep) => (state.first_action(&rep), rep.objective),
                        None => (Decision::Wait, 0.0),
                    };
                    let v = votes.entry(action).or_insert((0, 0.0));
                    v.0 += 1;
                    v.1 += value;
                }
                let key = |d: &Decision| match d {
                    Decision::Wait => Vec::new(),
                    Decision::Dispatch(ids) => ids.clone(),
                };
                let best = votes
                    .into_iter()
                    .max_by(|(da, (ca, sa)), (db, (cb, sb))| {
                        ca.cmp(cb)
                            .then_with(|| (sa / *ca as f64).total_cmp(&(sb / *cb as f64)))
                            .then_with(|| key(db).cmp(&key(da)))
                    })
                    .map(|(d, _)| d);
                Ok(best.unwrap_or(Decision::Wait))
            }
        }
    }
}
