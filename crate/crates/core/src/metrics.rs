//! Comparison metrics: travel distance, service rate and waiting times.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::plan::{route_len, validate_plan, Plan};

/// Wait statistics cover served orders only; `service_rate` covers all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub distance: f64,
    pub trips: usize,
    pub served: usize,
    pub service_rate: f64,
    pub avg_wait: Option<f64>,
    pub max_wait: Option<f64>,
    pub min_wait: Option<f64>,
    pub wait_variability: Option<f64>,
}

impl MetricsReport {
    /// Builds the report from trip lengths and per-order waits.
    pub fn from_parts(route_lengths: &[f64], waits: &[f64], total_orders: usize) -> Self {
        let served = waits.len();
        let (avg, max, min) = if served == 0 {
            (None, None, None)
        } else {
            let max = waits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = waits.iter().copied().fold(f64::INFINITY, f64::min);
            (Some(waits.iter().sum::<f64>() / served as f64), Some(max), Some(min))
        };
        MetricsReport {
            distance: route_lengths.iter().sum(),
            trips: route_lengths.len(),
            served,
            service_rate: if total_orders == 0 {
                0.0
            } else {
                served as f64 / total_orders as f64
            },
            avg_wait: avg,
            max_wait: max,
            min_wait: min,
            wait_variability: max.zip(min).map(|(a, b)| a - b),
        }
    }
}

pub fn compute_metrics(inst: &ValidInstance, plan: &Plan) -> Result<MetricsReport> {
    validate_plan(inst, plan).map_err(SddError::InvalidPlan)?;
    let lengths: Vec<f64> = plan
        .trips
        .iter()
        .map(|t| route_len(inst, plan.model_kind, t.interior()).expect("validated"))
        .collect();
    let waits: Vec<f64> = plan
        .assignments
        .iter()
        .map(|a| a.delivery_time - inst.orders[inst.order_pos(a.order).expect("validated")].release)
        .collect();
    Ok(MetricsReport::from_parts(&lengths, &waits, inst.orders.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_waits() {
        let m = MetricsReport::from_parts(&[10.0, 16.0], &[10.0, 40.0], 4);
        assert_eq!(m.avg_wait, Some(25.0));
        assert_eq!(m.max_wait, Some(40.0));
        assert_eq!(m.wait_variability, Some(30.0));
        assert_eq!(m.distance, 26.0);
        assert_eq!(m.service_rate, 0.5);
    }

    #[test]
    fn nobody_served() {
        let m = MetricsReport::from_parts(&[], &[], 3);
        assert_eq!(m.service_rate, 0.0);
        assert!(m.avg_wait.is_none() && m.max_wait.is_none() && m.wait_variability.is_none());
    }
}
