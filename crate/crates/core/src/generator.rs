//! Seeded instance generation: uniform random instances plus a few
//! hand-shaped families used for pattern checks and simulation.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a seed gives
//! the same instance on every platform with this crate version.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::geometry::Location;
use crate::instance::{Instance, OptionSet, Order, ReleaseDist, Station};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorProfile {
    pub orders: usize,
    pub stations: usize,
    /// Side of the square holding customers and stations; the depot sits at
    /// its center.
    pub side: f64,
    /// Releases are uniform on `[0, alpha * horizon]`.
    pub alpha: f64,
    pub horizon: f64,
    pub radius: Option<f64>,
    pub deadlines: Option<Vec<f64>>,
    /// Range for willingness to pay; values are sorted so that longer
    /// deadlines never pay more.
    pub wtp_range: (f64, f64),
    pub capacity: u32,
    pub big_m: Option<f64>,
    pub max_trips: Option<usize>,
    pub seed: u64,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        GeneratorProfile {
            orders: 8,
            stations: 3,
            side: 100.0,
            alpha: 0.6,
            horizon: 250.0,
            radius: Some(30.0),
            deadlines: Some(vec![60.0, 120.0, 240.0]),
            wtp_range: (5.0, 40.0),
            capacity: 3,
            big_m: Some(250.0),
            max_trips: None,
            seed: 0,
        }
    }
}

impl GeneratorProfile {
    /// The comparison setting: 8 orders, 3 stations of capacity 3,
    /// deadlines 60/120/240, horizon and penalty 250, radius 30, 4 trips.
    pub fn comparison(seed: u64) -> Self {
        GeneratorProfile {
            max_trips: Some(4),
            seed,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(0.0..=1.0).contains(&self.alpha) {
            bad.push(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.side.is_finite() && self.side >= 0.0) {
            bad.push(format!("side must be >= 0, got {}", self.side));
        }
        let (lo, hi) = self.wtp_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            bad.push(format!("wtp range needs 0 <= lo <= hi, got ({lo}, {hi})"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SddError::Config(bad.join("; ")))
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn wtp_vector(rng: &mut ChaCha8Rng, k: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| round2(rng.gen_range(lo..=hi))).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

/// Uniform random instance for `profile`.
///
/// Every order carries a uniform release distribution matching how its
/// release was drawn, so generated instances can also be simulated.
pub fn generate(profile: &GeneratorProfile) -> Result<Instance> {
    profile.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let side = profile.side;
    let mut inst = Instance::new(profile.horizon);
    inst.depot = Location::new(side / 2.0, side / 2.0);
    inst.radius = profile.radius;
    inst.big_m = profile.big_m;
    inst.max_trips = profile.max_trips;
    inst.options = profile.deadlines.clone().map(|deadlines| OptionSet { deadlines });
    let latest = profile.alpha * profile.horizon;
    let k = inst.num_options();
    for id in 1..=profile.orders as u32 {
        let x = round2(rng.gen_range(0.0..=side));
        let y = round2(rng.gen_range(0.0..=side));
        let release = round2(rng.gen_range(0.0..=latest));
        let mut order = Order::new(id, x, y, release).with_release_dist(ReleaseDist::Uniform { lo: 0.0, hi: latest });
        if k > 0 {
            order = order.with_wtp(wtp_vector(&mut rng, k, profile.wtp_range));
        }
        inst.orders.push(order);
    }
    for id in 1..=profile.stations as u32 {
        let x = round2(rng.gen_range(0.0..=side));
        let y = round2(rng.gen_range(0.0..=side));
        inst.stations.push(Station::new(id, x, y, profile.capacity));
    }
    Ok(inst)
}

/// Named instance families.
pub mod families {
    use super::*;

    fn jitter(rng: &mut ChaCha8Rng, x: f64, amount: f64) -> f64 {
        round2(x + rng.gen_range(-amount..=amount))
    }

    fn slot_base() -> Instance {
        let mut inst = Instance::new(250.0);
        inst.options = Some(OptionSet {
            deadlines: vec![60.0, 120.0, 240.0],
        });
        inst
    }

    /// Two far customers who order early and pay a lot, and six cheap
    /// customers close to the depot who order late. Revenue alone favors the
    /// two far customers; serving everyone nearby needs the late window.
    pub fn expensive_far_pair(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = slot_base();
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let spread: f64 = rng.gen_range(0.05..=0.08);
        for (id, angle) in [(1, theta), (2, theta + spread)] {
            let d = rng.gen_range(100.0..=102.0);
            inst.orders.push(
                Order::new(id, round2(d * angle.cos()), round2(d * angle.sin()), round2(rng.gen_range(30.0..=35.0)))
                    .with_wtp(vec![250.0, 150.0, 80.0]),
            );
        }
        for id in 3..=8u32 {
            let angle = f64::from(id) * std::f64::consts::TAU / 6.0 + rng.gen_range(-0.2..=0.2);
            let d = rng.gen_range(9.0..=12.0);
            inst.orders.push(
                Order::new(id, round2(d * angle.cos()), round2(d * angle.sin()), round2(rng.gen_range(145.0..=155.0)))
                    .with_wtp(wtp_vector(&mut rng, 3, (10.0, 20.0))),
            );
        }
        inst
    }

    /// Five customers around two stations. Station 1 (capacity 2) is the
    /// only one within 30 of four customers; station 2 (capacity 3) is the
    /// only one within 30 of the fifth. Two of the four are also within 40
    /// of station 2, so widening the radius lets every customer be served.
    pub fn two_station_radius(seed: u64, radius: f64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = Instance::new(250.0);
        inst.big_m = Some(250.0);
        inst.radius = Some(radius);
        inst.stations = vec![Station::new(1, -20.0, 0.0, 2), Station::new(2, 20.0, 0.0, 3)];
        let spots = [(-12.0, 10.0), (-12.0, -10.0), (-40.0, 5.0), (-40.0, -5.0), (35.0, 0.0)];
        for (id, (x, y)) in (1..).zip(spots) {
            let release = round2(rng.gen_range(0.0..=50.0));
            inst.orders.push(Order::new(id, jitter(&mut rng, x, 2.0), jitter(&mut rng, y, 2.0), release));
        }
        inst
    }

    /// Stations at (10, 0) and (20, 0) with one customer each, both ordering
    /// at time 0.
    pub fn collinear_stations() -> Instance {
        let mut inst = Instance::new(250.0);
        inst.big_m = Some(250.0);
        inst.stations = vec![Station::new(1, 10.0, 0.0, 5), Station::new(2, 20.0, 0.0, 5)];
        inst.orders = vec![
            Order::new(1, 10.0, 0.0, 0.0).with_stations(vec![1]),
            Order::new(2, 20.0, 0.0, 0.0).with_stations(vec![2]),
        ];
        inst
    }

    /// Every customer sits at the depot and orders at time 0, so every order
    /// can take its best-paying option.
    pub fn all_at_depot(seed: u64, orders: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = slot_base();
        for id in 1..=orders as u32 {
            inst.orders
                .push(Order::new(id, 0.0, 0.0, 0.0).with_wtp(wtp_vector(&mut rng, 3, (0.0, 50.0))));
        }
        inst
    }

    /// Simulation benchmark: a near cluster with early uncertain releases and
    /// a far cluster with late ones. Nominal releases are the distribution
    /// means.
    pub fn two_clusters(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = Instance::new(250.0);
        let mut id = 1;
        for (cx, cy, lo, hi) in [(12.0, 0.0, 0.0, 60.0), (-36.0, 27.0, 60.0, 150.0)] {
            for _ in 0..3 {
                let (x, y) = (jitter(&mut rng, cx, 6.0), jitter(&mut rng, cy, 6.0));
                let a = round2(rng.gen_range(lo..=(lo + hi) / 2.0));
                let b = round2(rng.gen_range((lo + hi) / 2.0..=hi));
                inst.orders.push(
                    Order::new(id, x, y, round2((a + b) / 2.0)).with_release_dist(ReleaseDist::Uniform { lo: a, hi: b }),
                );
                id += 1;
            }
        }
        inst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_profile_is_valid() {
        let inst = generate(&GeneratorProfile::comparison(3)).unwrap().validate().unwrap();
        assert_eq!(inst.orders.len(), 8);
        assert_eq!(inst.stations.len(), 3);
        assert!(inst.stations.iter().all(|s| s.capacity == 3));
        assert_eq!(inst.max_trips(), 4);
        for o in &inst.orders {
            let w = o.wtp.as_ref().unwrap();
            assert!(w.windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn empty_and_deterministic() {
        let p = GeneratorProfile {
            orders: 0,
            ..Default::default()
        };
        assert!(generate(&p).unwrap().validate().unwrap().orders.is_empty());
        let p = GeneratorProfile::comparison(11);
        assert_eq!(generate(&p).unwrap().to_json(), generate(&p).unwrap().to_json());
    }

    #[test]
    fn bad_alpha() {
        let p = GeneratorProfile {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(generate(&p).is_err());
    }

    #[test]
    fn radius_family_memberships() {
        for seed in 0..20 {
            let narrow = families::two_station_radius(seed, 30.0).validate().unwrap();
            assert!(narrow.orders.iter().all(|o| o.feasible_stations.as_ref().unwrap().len() == 1));
            let wide = families::two_station_radius(seed, 40.0).validate().unwrap();
            assert!(wide.orders.iter().any(|o| o.feasible_stations.as_ref().unwrap().len() >= 2));
        }
    }
}
