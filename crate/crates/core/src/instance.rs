//! Instances: orders, pickup stations, deadline options and the horizon,
//! together with validation/normalization and the JSON file format.

use std::collections::HashSet;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{InstanceIssue, Result, SddError};
use crate::geometry::{distance_matrix, feasible_stations, DistanceMatrix, Location};

/// Tolerance for probability mass sums in discrete release distributions.
const MASS_TOL: f64 = 1e-9;

/// Distribution of an order's release date, used by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReleaseDist {
    Point { t: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `(time, probability)` atoms.
    Discrete { points: Vec<(f64, f64)> },
}

impl ReleaseDist {
    fn issues(&self, order: u32, out: &mut Vec<InstanceIssue>) {
        let mut bad = |msg: String| out.push(InstanceIssue(format!("order {order}: {msg}")));
        match self {
            ReleaseDist::Point { t } => {
                if !(t.is_finite() && *t >= 0.0) {
                    bad(format!("point release {t} must be finite and >= 0"));
                }
            }
            ReleaseDist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo <= hi) {
                    bad(format!("uniform release needs 0 <= lo <= hi, got [{lo}, {hi}]"));
                }
            }
            ReleaseDist::Discrete { points } => {
                if points.is_empty() {
                    bad("discrete release has no atoms".into());
                }
                if points
                    .iter()
                    .any(|&(t, p)| !(t.is_finite() && t >= 0.0 && p.is_finite() && p > 0.0))
                {
                    bad("discrete atoms need t >= 0 and p > 0".into());
                }
                let mass: f64 = points.iter().map(|&(_, p)| p).sum();
                if (mass - 1.0).abs() > MASS_TOL {
                    bad(format!("discrete probabilities sum to {mass}, not 1"));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: u32,
    pub loc: Location,
    pub release: f64,
    /// Willingness to pay, one entry per deadline option.
    pub wtp: Option<Vec<f64>>,
    pub feasible_stations: Option<Vec<u32>>,
    pub release_dist: Option<ReleaseDist>,
}

impl Order {
    pub fn new(id: u32, x: f64, y: f64, release: f64) -> Self {
        Order {
            id,
            loc: Location::new(x, y),
            release,
            wtp: None,
            feasible_stations: None,
            release_dist: None,
        }
    }

    pub fn with_wtp(mut self, wtp: Vec<f64>) -> Self {
        self.wtp = Some(wtp);
        self
    }

    pub fn with_stations(mut self, stations: Vec<u32>) -> Self {
        self.feasible_stations = Some(stations);
        self
    }

    pub fn with_release_dist(mut self, dist: ReleaseDist) -> Self {
        self.release_dist = Some(dist);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: u32,
    pub loc: Location,
    /// Parcels the station can hold over the whole horizon.
    pub capacity: u32,
}

impl Station {
    pub fn new(id: u32, x: f64, y: f64, capacity: u32) -> Self {
        Station {
            id,
            loc: Location::new(x, y),
            capacity,
        }
    }
}

/// Delivery deadline options, measured from the order time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSet {
    pub deadlines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub depot: Location,
    pub orders: Vec<Order>,
    pub stations: Vec<Station>,
    pub options: Option<OptionSet>,
    pub horizon: f64,
    pub radius: Option<f64>,
    pub big_m: Option<f64>,
    pub max_trips: Option<usize>,
}

impl Instance {
    pub fn new(horizon: f64) -> Self {
        Instance {
            depot: Location::new(0.0, 0.0),
            orders: Vec::new(),
            stations: Vec::new(),
            options: None,
            horizon,
            radius: None,
            big_m: None,
            max_trips: None,
        }
    }

    pub fn num_options(&self) -> usize {
        self.options.as_ref().map_or(0, |o| o.deadlines.len())
    }

    /// Checks every invariant and returns the normalized instance.
    ///
    /// Normalization sorts orders and stations by id, derives missing
    /// feasible-station lists from `radius`, and fills `big_m = horizon` and
    /// `max_trips = max(|N|, 1)`. Explicit station lists win over the radius.
    pub fn validate(mut self) -> Result<ValidInstance> {
        let mut issues = Vec::new();
        let push = |issues: &mut Vec<InstanceIssue>, s: String| issues.push(InstanceIssue(s));

        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            push(&mut issues, format!("horizon must be > 0, got {}", self.horizon));
        }
        if !self.depot.is_finite() {
            push(&mut issues, "depot has a non-finite coordinate".into());
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r >= 0.0) {
                push(&mut issues, format!("radius must be >= 0, got {r}"));
            }
        }
        if let Some(m) = self.big_m {
            if !m.is_finite() {
                push(&mut issues, "big_m must be finite".into());
            }
        }
        if self.max_trips == Some(0) {
            push(&mut issues, "max_trips must be positive".into());
        }
        if let Some(opts) = &self.options {
            let d = &opts.deadlines;
            if d.is_empty() {
                push(&mut issues, "options needs at least one deadline".into());
            }
            if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                push(&mut issues, "option deadlines must be positive".into());
            }
            if d.windows(2).any(|w| w[0] >= w[1]) {
                push(&mut issues, "option deadlines must be strictly increasing".into());
            }
        }

        let mut seen = HashSet::new();
        for s in &self.stations {
            if s.id == 0 {
                push(&mut issues, "station id 0 is reserved for the depot".into());
            }
            if !seen.insert(s.id) {
                push(&mut issues, format!("duplicate station id {}", s.id));
            }
            if !s.loc.is_finite() {
                push(&mut issues, format!("station {} has a non-finite coordinate", s.id));
            }
        }
        let station_ids = seen;

        let n_opts = self.num_options();
        let mut seen = HashSet::new();
        for o in &self.orders {
            if o.id == 0 {
                push(&mut issues, "order id 0 is reserved for the depot".into());
            }
            if !seen.insert(o.id) {
                push(&mut issues, format!("duplicate order id {}", o.id));
            }
            if !o.loc.is_finite() {
                push(&mut issues, format!("order {} has a non-finite coordinate", o.id));
            }
            if !o.release.is_finite() || o.release < 0.0 {
                push(&mut issues, format!("order {}: negative release {}", o.id, o.release));
            }
            if let Some(w) = &o.wtp {
                if w.len() != n_opts {
                    push(
                        &mut issues,
                        format!("order {}: wtp has {} entries, expected {n_opts}", o.id, w.len()),
                    );
                }
                if w.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
                    push(&mut issues, format!("order {}: wtp entries must be >= 0", o.id));
                }
            }
            if let Some(fs) = &o.feasible_stations {
                for sid in fs {
                    if !station_ids.contains(sid) {
                        push(&mut issues, format!("order {}: unknown station {sid}", o.id));
                    }
                }
            }
            if let Some(d) = &o.release_dist {
                d.issues(o.id, &mut issues);
            }
        }

        if !issues.is_empty() {
            return Err(SddError::InvalidInstance(issues));
        }

        self.orders.sort_by_key(|o| o.id);
        self.stations.sort_by_key(|s| s.id);
        for o in &mut self.orders {
            match (&mut o.feasible_stations, self.radius) {
                (Some(fs), _) => {
                    fs.sort_unstable();
                    fs.dedup();
                }
                (None, Some(r)) => {
                    o.feasible_stations = Some(feasible_stations(
                        &o.loc,
                        self.stations.iter().map(|s| (s.id, &s.loc)),
                        r,
                    ));
                }
                (None, None) => {}
            }
        }
        self.big_m.get_or_insert(self.horizon);
        self.max_trips.get_or_insert(self.orders.len().max(1));

        let order_points: Vec<Location> = std::iter::once(self.depot)
            .chain(self.orders.iter().map(|o| o.loc))
            .collect();
        let station_points: Vec<Location> = std::iter::once(self.depot)
            .chain(self.stations.iter().map(|s| s.loc))
            .collect();
        Ok(ValidInstance {
            order_dist: distance_matrix(&order_points)?,
            station_dist: distance_matrix(&station_points)?,
            inst: self,
        })
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Ok(file.into())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// A validated, normalized instance with its travel matrices.
///
/// Order node `i + 1` is `orders[i]`, station node `j + 1` is `stations[j]`,
/// node 0 is the depot in both matrices.
#[derive(Debug, Clone)]
pub struct ValidInstance {
    inst: Instance,
    order_dist: DistanceMatrix,
    station_dist: DistanceMatrix,
}

impl Deref for ValidInstance {
    type Target = Instance;

    fn deref(&self) -> &Instance {
        &self.inst
    }
}

impl ValidInstance {
    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn into_inner(self) -> Instance {
        self.inst
    }

    /// Depot plus orders.
    pub fn order_matrix(&self) -> &DistanceMatrix {
        &self.order_dist
    }

    /// Depot plus stations.
    pub fn station_matrix(&self) -> &DistanceMatrix {
        &self.station_dist
    }

    pub fn big_m(&self) -> f64 {
        self.inst.big_m.expect("normalized")
    }

    pub fn max_trips(&self) -> usize {
        self.inst.max_trips.expect("normalized")
    }

    pub fn order_pos(&self, id: u32) -> Option<usize> {
        self.inst.orders.binary_search_by_key(&id, |o| o.id).ok()
    }

    pub fn station_pos(&self, id: u32) -> Option<usize> {
        self.inst.stations.binary_search_by_key(&id, |s| s.id).ok()
    }

    /// Round trip depot -> order -> depot.
    pub fn order_round_trip(&self, pos: usize) -> f64 {
        2.0 * self.order_dist.get(0, pos + 1)
    }

    pub fn station_leg(&self, pos: usize) -> f64 {
        self.station_dist.get(0, pos + 1)
    }

    /// Returns a copy with every release replaced, for scenario evaluation.
    pub fn with_releases(&self, releases: &[f64]) -> ValidInstance {
        let mut out = self.clone();
        for (o, &r) in out.inst.orders.iter_mut().zip(releases) {
            o.release = r;
        }
        out
    }

    /// Checks that every order carries a WTP vector and options exist.
    pub fn require_slots(&self) -> Result<&OptionSet> {
        let opts = self
            .inst
            .options
            .as_ref()
            .ok_or_else(|| SddError::MissingData("instance has no deadline options".into()))?;
        if let Some(o) = self.inst.orders.iter().find(|o| o.wtp.is_none()) {
            return Err(SddError::MissingData(format!("order {} has no wtp vector", o.id)));
        }
        Ok(opts)
    }

    /// Checks station data is usable and returns per-order feasible station
    /// positions.
    pub fn require_stations(&self) -> Result<Vec<Vec<usize>>> {
        if self.inst.stations.is_empty() && !self.inst.orders.is_empty() {
            return Err(SddError::MissingData("instance has no pickup stations".into()));
        }
        self.inst
            .orders
            .iter()
            .map(|o| {
                let fs = o.feasible_stations.as_ref().ok_or_else(|| {
                    SddError::MissingData(format!(
                        "order {} has no feasible stations and no radius is set",
                        o.id
                    ))
                })?;
                Ok(fs
                    .iter()
                    .map(|&sid| self.station_pos(sid).expect("validated reference"))
                    .collect())
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    horizon: f64,
    depot: LocationRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<OptionSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    big_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_trips: Option<usize>,
    #[serde(default)]
    orders: Vec<OrderRecord>,
    #[serde(default)]
    stations: Vec<StationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationRecord {
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderRecord {
    id: u32,
    x: f64,
    y: f64,
    release: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wtp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stations: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    release_dist: Option<ReleaseDist>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationRecord {
    id: u32,
    x: f64,
    y: f64,
    capacity: u32,
}

impl From<InstanceFile> for Instance {
    fn from(f: InstanceFile) -> Self {
        Instance {
            depot: Location::new(f.depot.x, f.depot.y),
            orders: f
                .orders
                .into_iter()
                .map(|o| Order {
                    id: o.id,
                    loc: Location::new(o.x, o.y),
                    release: o.release,
                    wtp: o.wtp,
                    feasible_stations: o.stations,
                    release_dist: o.release_dist,
                })
                .collect(),
            stations: f
                .stations
                .into_iter()
                .map(|s| Station::new(s.id, s.x, s.y, s.capacity))
                .collect(),
            options: f.options,
            horizon: f.horizon,
            radius: f.radius,
            big_m: f.big_m,
            max_trips: f.max_trips,
        }
    }
}

impl From<&Instance> for InstanceFile {
    fn from(i: &Instance) -> Self {
        InstanceFile {
            horizon: i.horizon,
            depot: LocationRecord {
                x: i.depot.x,
                y: i.depot.y,
            },
            options: i.options.clone(),
            radius: i.radius,
            big_m: i.big_m,
            max_trips: i.max_trips,
            orders: i
                .orders
                .iter()
                .map(|o| OrderRecord {
                    id: o.id,
                    x: o.loc.x,
                    y: o.loc.y,
                    release: o.release,
                    wtp: o.wtp.clone(),
                    stations: o.feasible_stations.clone(),
                    release_dist: o.release_dist.clone(),
                })
                .collect(),
            stations: i
                .stations
                .iter()
                .map(|s| StationRecord {
                    id: s.id,
                    x: s.loc.x,
                    y: s.loc.y,
                    capacity: s.capacity,
                })
                .collect(),
        }
    }
}
