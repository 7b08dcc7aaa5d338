//! Rolling-horizon dispatch simulation when release dates are uncertain.
//!
//! Each replication draws one scenario of realized releases, runs every
//! policy on it and compares the result with the perfect-information optimum
//! for that scenario.

mod episode;
mod policy;
mod sampling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::solver::{solve_f1, SolverConfig};

pub use episode::{run_episode, Episode};
pub use policy::{Decision, DispatchRule, EpochState, Policy};
pub use sampling::{mean_after, sample, sample_after, sample_scenario, Scenario};

const SCENARIO_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Spacing of decision epochs.
    pub grid_step: f64,
    pub replications: usize,
    pub master_seed: u64,
    /// Largest order count accepted.
    pub max_orders: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid_step: 1.0,
            replications: 100,
            master_seed: 0,
            max_orders: 12,
        }
    }
}

/// Generator for the scenario draw of a replication.
pub fn scenario_rng(master_seed: u64, replication: usize) -> ChaCha8Rng {
    stream(master_seed, replication, SCENARIO_STREAM)
}

/// Generator handed to each policy in a replication. Every policy gets the
/// same stream, so policies are compared on common random numbers.
pub fn policy_rng(master_seed: u64, replication: usize) -> ChaCha8Rng {
    stream(master_seed, replication, POLICY_STREAM)
}

fn stream(master_seed: u64, replication: usize, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((replication as u64) << 1) | tag);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub replication: usize,
    pub releases: Vec<f64>,
    /// Served count per policy, in the report's policy order.
    pub served: Vec<usize>,
    pub pi_bound: usize,
}

/// Mean and standard error of the per-replication difference
/// `served[second] - served[first]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub first: String,
    pub second: String,
    pub mean_diff: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policies: Vec<String>,
    pub config: SimConfig,
    pub replications: Vec<Replication>,
    pub mean_served: Vec<f64>,
    pub mean_pi_bound: f64,
    pub differences: Vec<PairedDifference>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per replication and policy:
    /// `replication,policy,served,pi_bound`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["replication", "policy", "served", "pi_bound"])?;
        for r in &self.replications {
            for (name, served) in self.policies.iter().zip(&r.served) {
                w.write_record([
                    r.replication.to_string(),
                    name.clone(),
                    served.to_string(),
                    r.pi_bound.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| SddError::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `replications x policies` episodes.
///
/// Replications run in parallel; each one derives its own generators from
/// `(master_seed, replication)`, so the report does not depend on thread
/// scheduling.
pub fn simulate(inst: &ValidInstance, policies: &[Policy], cfg: &SimConfig) -> Result<SimReport> {
    if inst.orders.len() > cfg.max_orders {
        return Err(SddError::TooLarge {
            what: "simulated orders",
            size: inst.orders.len(),
            limit: cfg.max_orders,
        });
    }
    if cfg.replications == 0 {
        return Err(SddError::Config("replications must be positive".into()));
    }
    if policies.is_empty() {
        return Err(SddError::Config("no policies to simulate".into()));
    }
    for p in policies {
        p.check()?;
    }
    let pi_cfg = SolverConfig::with_max_trips(inst.orders.len().max(1));
    let replications = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<Replication> {
            let scenario = sample_scenario(inst, &mut scenario_rng(cfg.master_seed, rep))?;
            let realized = inst.with_releases(&scenario.releases);
            let pi = solve_f1(&realized, &pi_cfg)?;
            let served = policies
                .iter()
                .map(|p| {
                    let mut rng = policy_rng(cfg.master_seed, rep);
                    run_episode(inst, &scenario, p, cfg.grid_step, &mut rng).map(|e| e.served)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Replication {
                replication: rep,
                releases: scenario.releases,
                served,
                pi_bound: pi.served,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = replications.len() as f64;
    let names: Vec<String> = policies.iter().map(|p| p.to_string()).collect();
    let mean_served = (0..policies.len())
        .map(|j| replications.iter().map(|r| r.served[j] as f64).sum::<f64>() / n)
        .collect();
    let mean_pi_bound = replications.iter().map(|r| r.pi_bound as f64).sum::<f64>() / n;
    let mut differences = Vec::new();
    for a in 0..policies.len() {
        for b in a + 1..policies.len() {
            let d: Vec<f64> = replications
                .iter()
                .map(|r| r.served[b] as f64 - r.served[a] as f64)
                .collect();
            let (mean_diff, std_err) = mean_and_se(&d);
            differences.push(PairedDifference {
                first: names[a].clone(),
                second: names[b].clone(),
                mean_diff,
                std_err,
            });
        }
    }
    Ok(SimReport {
        policies: names,
        config: cfg.clone(),
        replications,
        mean_served,
        mean_pi_bound,
        differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, Order, ReleaseDist};

    fn one_order(release: f64) -> ValidInstance {
        let mut inst = Instance::new(250.0);
        inst.orders
            .push(Order::new(1, 3.0, 4.0, release).with_release_dist(ReleaseDist::Point { t: release }));
        inst.validate().unwrap()
    }

    #[test]
    fn myopic_dispatches_on_release() {
        let inst = one_order(10.0);
        let scenario = sample_scenario(&inst, &mut scenario_rng(0, 0)).unwrap();
        assert_eq!(scenario.releases, vec![10.0]);
        let ep = run_episode(&inst, &scenario, &Policy::Myopic, 1.0, &mut policy_rng(0, 0)).unwrap();
        assert_eq!(ep.served, 1);
        assert_eq!(ep.plan.trips[0].start, 10.0);
        let dispatches: Vec<_> = ep.trace.iter().filter(|(_, d)| *d != Decision::Wait).collect();
        assert_eq!(dispatches, vec![&(10.0, Decision::Dispatch(vec![1]))]);
    }

    #[test]
    fn empty_instance_serves_nothing() {
        let inst = Instance::new(100.0).validate().unwrap();
        let ep = run_episode(&inst, &Scenario { releases: vec![] }, &Policy::Myopic, 1.0, &mut policy_rng(0, 0)).unwrap();
        assert_eq!(ep.served, 0);
    }

    struct Eager;

    impl DispatchRule for Eager {
        fn decide(&self, state: &EpochState<'_>, _: &mut ChaCha8Rng) -> Result<Decision> {
            Ok(Decision::Dispatch(state.inst.orders.iter().map(|o| o.id).collect()))
        }
    }

    #[test]
    fn unreleased_dispatch_is_a_protocol_error() {
        let inst = one_order(10.0);
        let scenario = Scenario { releases: vec![10.0] };
        let err = run_episode(&inst, &scenario, &Eager, 1.0, &mut policy_rng(0, 0)).unwrap_err();
        assert!(matches!(err, SddError::Protocol(_)));
    }

    #[test]
    fn report_is_deterministic_and_bounded() {
        let inst = crate::generator::families::two_clusters(3).validate().unwrap();
        let cfg = SimConfig {
            grid_step: 5.0,
            replications: 6,
            master_seed: 7,
            ..Default::default()
        };
        let policies = [Policy::Myopic, Policy::Consensus { samples: 3 }];
        let a = simulate(&inst, &policies, &cfg).unwrap();
        let b = simulate(&inst, &policies, &cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.replications {
            assert!(r.served.iter().all(|&s| s <= r.pi_bound));
        }
        let csv = a.to_csv().unwrap();
        assert!(csv.starts_with("replication,policy,served,pi_bound\n"));
        assert_eq!(csv.lines().count(), 1 + 6 * 2);
    }
}
