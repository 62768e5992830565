//! Problem instances: one depot, `n` customers, `s` trucks, `m` drones.
//!
//! Vertex 0 is the depot, customers are 1..=n. Trucks travel a time matrix
//! `t[i][j]`; drones serve a customer with a depot-customer-depot mission
//! flown by `k` coupled drones, whose duration `tau[k]` is given per
//! customer for a contiguous range `q..=p` of group sizes. Customers
//! flagged `truck_only` never fly (too heavy, no landing spot, ...).
//!
//! The JSON form is canonical: keys appear in a fixed sorted order, the
//! `drone_time` table in ascending group size, customers in ascending id.
//! Serializing the same instance twice yields identical bytes.
//!
//! ```json
//! {
//!   "customers": [
//!     { "drone_time": { "1": 24, "2": 17 }, "id": 1, "truck_only": false,
//!       "w": 1.5, "xy": [4.0, 2.5] }
//!   ],
//!   "depot": [5.0, 5.0],
//!   "m": 3, "n": 1, "name": "tiny", "s": 1,
//!   "units": { "dist": "km", "time": "min" }
//! }
//! ```
//!
//! When the file carries no explicit `truck_time` matrix, truck legs are
//! derived from coordinates: Manhattan distance at 30 km/h. With
//! `units.time = "min"` each derived leg is rounded half-up to a whole
//! minute; `"min-exact"` keeps the exact rational value. An explicit
//! matrix is always taken verbatim.

use std::fmt;

use num_rational::Ratio;
use num_traits::Signed;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::time::{dyadic, Minutes};

pub type NodeId = usize;

/// Truck cruise speed used when deriving the matrix from coordinates.
pub const TRUCK_SPEED_KMH: f64 = 30.0;

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }
}

/// Exact Manhattan travel time between two points, in minutes.
pub fn manhattan_truck_time(a: Point, b: Point, speed_kmh: f64) -> Minutes {
    let [ax, ay, bx, by] =
        [a.x, a.y, b.x, b.y].map(|v| dyadic(v).expect("finite coordinate"));
    let speed = dyadic(speed_kmh).expect("finite speed");
    assert!(speed > Ratio::from_integer(0), "speed must be positive");
    let dist_km = (ax - bx).abs() + (ay - by).abs();
    Minutes::from_ratio(dist_km * Ratio::from_integer(60) / speed)
}

pub fn euclid_km(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// How a customer may be served.
#[derive(Clone, PartialEq, Debug)]
pub enum Service {
    TruckOnly,
    /// Drone-eligible: `tau[i]` is the mission duration for `q + i`
    /// coupled drones, defined exactly for group sizes `q..=p`.
    Flexible {
        q: usize,
        p: usize,
        tau: Vec<Minutes>,
    },
}

#[derive(Clone, PartialEq, Debug)]
pub struct Customer {
    pub id: NodeId,
    pub xy: Point,
    pub w: f64,
    pub service: Service,
}

/// Interpretation of times in the file, from `units.time`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum TimeMode {
    /// Whole minutes; derived truck legs are rounded half-up.
    #[default]
    WholeMin,
    /// Exact rational minutes; derived truck legs are kept unrounded.
    ExactMin,
}

/// Dense (n+1) x (n+1) travel time matrix, row-major, vertex 0 first.
#[derive(Clone, PartialEq, Debug)]
pub struct TimeMatrix {
    n: usize,
    vals: Vec<Minutes>,
}

impl TimeMatrix {
    pub fn from_rows(rows: Vec<Vec<Minutes>>) -> Result<TimeMatrix, InstanceError> {
        let n = rows.len().checked_sub(1).ok_or(InstanceError::MatrixShape {
            rows: 0,
            cols: 0,
            expect: 0,
        })?;
        let mut vals = Vec::with_capacity((n + 1) * (n + 1));
        for row in &rows {
            if row.len() != n + 1 {
                return Err(InstanceError::MatrixShape {
                    rows: rows.len(),
                    cols: row.len(),
                    expect: n + 1,
                });
            }
            vals.extend_from_slice(row);
        }
        Ok(TimeMatrix { n, vals })
    }

    pub fn from_coords(coords: &[Point], speed_kmh: f64, mode: TimeMode) -> TimeMatrix {
        let n = coords.len() - 1;
        let mut vals = Vec::with_capacity((n + 1) * (n + 1));
        for &a in coords {
            for &b in coords {
                let t = manhattan_truck_time(a, b, speed_kmh);
                vals.push(match mode {
                    TimeMode::WholeMin => t.round_half_up(),
                    TimeMode::ExactMin => t,
                });
            }
        }
        TimeMatrix { n, vals }
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> Minutes {
        self.vals[i * (self.n + 1) + j]
    }

    fn rows(&self) -> Vec<Vec<Minutes>> {
        (0..=self.n)
            .map(|i| (0..=self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// A validated instance. Construct via [`Instance::new`], [`Instance::from_json`]
/// or [`generate`]; every constructor enforces the same invariants.
#[derive(Clone, PartialEq, Debug)]
pub struct Instance {
    name: String,
    s: usize,
    m: usize,
    depot: Point,
    customers: Vec<Customer>,
    truck: TimeMatrix,
    explicit_matrix: bool,
    time_mode: TimeMode,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum InstanceError {
    #[error("fleet must not be empty: {which} = 0")]
    EmptyFleet { which: &'static str },
    #[error("customer count {customers} does not match n = {n}")]
    SizeMismatch { n: usize, customers: usize },
    #[error("customer id {id} out of range 1..={n} or repeated")]
    BadId { id: NodeId, n: usize },
    #[error("coordinate of vertex {id} is not finite")]
    BadCoordinate { id: NodeId },
    #[error("truck matrix is {rows} x {cols}, expected square of side {expect}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        expect: usize,
    },
    #[error("negative truck time at ({i}, {j})")]
    NegativeTime { i: NodeId, j: NodeId },
    #[error("nonzero truck time on diagonal at vertex {i}")]
    NonzeroDiagonal { i: NodeId },
    #[error("triangle inequality violated: t[{i}][{k}] > t[{i}][{j}] + t[{j}][{k}]")]
    Triangle { i: NodeId, j: NodeId, k: NodeId },
    #[error("customer {customer}: group range q = {q}, p = {p} invalid for m = {m}")]
    GroupRange {
        customer: NodeId,
        q: usize,
        p: usize,
        m: usize,
    },
    #[error("customer {customer}: drone_time has a gap at group size {k}")]
    KRangeGap { customer: NodeId, k: usize },
    #[error("customer {customer}: tau for group size {k} must be a positive integer")]
    TauNotPositiveInteger { customer: NodeId, k: usize },
    #[error("customer {customer} is truck_only but carries drone times")]
    TruckOnlyWithDroneTimes { customer: NodeId },
    #[error("customer {customer} is flexible but carries no drone times")]
    NoDroneTimes { customer: NodeId },
    #[error("unsupported units: dist = {dist:?}, time = {time:?}")]
    BadUnits { dist: String, time: String },
}

#[derive(Error, Debug)]
pub enum ParseError {
    #[error("json syntax: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] InstanceError),
    #[error("line {line}: {msg}")]
    Text { line: usize, msg: String },
}

impl Instance {
    /// Build and validate. `truck_time` rows override the derived matrix.
    pub fn new(
        name: impl Into<String>,
        s: usize,
        m: usize,
        depot: Point,
        mut customers: Vec<Customer>,
        truck_time: Option<Vec<Vec<Minutes>>>,
        time_mode: TimeMode,
    ) -> Result<Instance, InstanceError> {
        let n = customers.len();
        if s == 0 {
            return Err(InstanceError::EmptyFleet { which: "s" });
        }
        if m == 0 {
            return Err(InstanceError::EmptyFleet { which: "m" });
        }
        if !(depot.x.is_finite() && depot.y.is_finite()) {
            return Err(InstanceError::BadCoordinate { id: 0 });
        }
        customers.sort_by_key(|c| c.id);
        let mut seen = vec![false; n + 1];
        for c in &customers {
            if c.id == 0 || c.id > n || seen[c.id] {
                return Err(InstanceError::BadId { id: c.id, n });
            }
            seen[c.id] = true;
            if !(c.xy.x.is_finite() && c.xy.y.is_finite()) {
                return Err(InstanceError::BadCoordinate { id: c.id });
            }
            match &c.service {
                Service::TruckOnly => {}
                Service::Flexible { q, p, tau } => {
                    if *q < 1 || q > p || *p > m {
                        return Err(InstanceError::GroupRange {
                            customer: c.id,
                            q: *q,
                            p: *p,
                            m,
                        });
                    }
                    if tau.len() != p - q + 1 {
                        return Err(InstanceError::KRangeGap {
                            customer: c.id,
                            k: q + tau.len().min(p - q),
                        });
                    }
                    for (off, t) in tau.iter().enumerate() {
                        let ok = t.is_integer() && !t.is_negative() && !t.is_zero();
                        if !ok {
                            return Err(InstanceError::TauNotPositiveInteger {
                                customer: c.id,
                                k: q + off,
                            });
                        }
                    }
                }
            }
        }

        let explicit_matrix = truck_time.is_some();
        let truck = match truck_time {
            Some(rows) => {
                let mat = TimeMatrix::from_rows(rows)?;
                if mat.n != n {
                    return Err(InstanceError::MatrixShape {
                        rows: mat.n + 1,
                        cols: mat.n + 1,
                        expect: n + 1,
                    });
                }
                mat
            }
            None => {
                let mut coords = Vec::with_capacity(n + 1);
                coords.push(depot);
                coords.extend(customers.iter().map(|c| c.xy));
                TimeMatrix::from_coords(&coords, TRUCK_SPEED_KMH, time_mode)
            }
        };
        validate_matrix(&truck)?;

        Ok(Instance {
            name: name.into(),
            s,
            m,
            depot,
            customers,
            truck,
            explicit_matrix,
            time_mode,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.customers.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn coord(&self, i: NodeId) -> Point {
        if i == 0 {
            self.depot
        } else {
            self.customers[i - 1].xy
        }
    }

    pub fn weight(&self, j: NodeId) -> f64 {
        self.customers[j - 1].w
    }

    pub fn truck_time(&self, i: NodeId, j: NodeId) -> Minutes {
        self.truck.get(i, j)
    }

    /// Depot round trip by truck, out and back.
    pub fn round_trip(&self, j: NodeId) -> Minutes {
        self.truck.get(0, j) + self.truck.get(j, 0)
    }

    pub fn customers(&self) -> impl Iterator<Item = NodeId> + '_ {
        1..=self.n()
    }

    pub fn is_truck_only(&self, j: NodeId) -> bool {
        matches!(self.customers[j - 1].service, Service::TruckOnly)
    }

    /// Customers that must ride a truck.
    pub fn forced_truck(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.customers().filter(|&j| self.is_truck_only(j))
    }

    /// Drone-eligible customers.
    pub fn flexible(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.customers().filter(|&j| !self.is_truck_only(j))
    }

    /// Feasible drone group sizes `(q, p)` for customer `j`.
    pub fn drone_range(&self, j: NodeId) -> Option<(usize, usize)> {
        match self.customers[j - 1].service {
            Service::TruckOnly => None,
            Service::Flexible { q, p, .. } => Some((q, p)),
        }
    }

    /// Mission duration for `k` coupled drones serving `j`, if `k` is
    /// inside the customer's feasible group range. `None` stands for an
    /// infeasible combination; callers must not treat it as a number.
    pub fn drone_time(&self, j: NodeId, k: usize) -> Option<Minutes> {
        match &self.customers[j - 1].service {
            Service::TruckOnly => None,
            Service::Flexible { q, p, tau } => {
                (*q..=*p).contains(&k).then(|| tau[k - q])
            }
        }
    }

    /// Largest `k * tau[k]` over the feasible group sizes of `j`: the most
    /// drone-minutes the customer can absorb. Drives branching order.
    pub fn max_drone_work(&self, j: NodeId) -> Option<Minutes> {
        let (q, p) = self.drone_range(j)?;
        (q..=p)
            .map(|k| self.drone_time(j, k).unwrap() * k as i64)
            .max()
    }

    pub fn time_mode(&self) -> TimeMode {
        self.time_mode
    }

    pub fn customer(&self, j: NodeId) -> &Customer {
        &self.customers[j - 1]
    }

    /// Clone with a different fleet. Affects validation of group ranges,
    /// so it can fail when shrinking `m` below an existing `p`.
    pub fn with_fleet(&self, s: usize, m: usize) -> Result<Instance, InstanceError> {
        Instance::new(
            self.name.clone(),
            s,
            m,
            self.depot,
            self.customers.clone(),
            self.explicit_matrix.then(|| self.truck.rows()),
            self.time_mode,
        )
    }

    pub fn from_json(text: &str) -> Result<Instance, ParseError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        if raw.customers.len() != raw.n {
            return Err(InstanceError::SizeMismatch {
                n: raw.n,
                customers: raw.customers.len(),
            }
            .into());
        }
        let time_mode = match (raw.units.dist.as_str(), raw.units.time.as_str()) {
            ("km", "min") => TimeMode::WholeMin,
            ("km", "min-exact") => TimeMode::ExactMin,
            _ => {
                return Err(InstanceError::BadUnits {
                    dist: raw.units.dist,
                    time: raw.units.time,
                }
                .into())
            }
        };
        let customers = raw
            .customers
            .into_iter()
            .map(|c| {
                let service = if c.truck_only {
                    if !c.drone_time.0.is_empty() {
                        return Err(InstanceError::TruckOnlyWithDroneTimes { customer: c.id });
                    }
                    Service::TruckOnly
                } else {
                    let entries = c.drone_time.0;
                    if entries.is_empty() {
                        return Err(InstanceError::NoDroneTimes { customer: c.id });
                    }
                    let q = entries[0].0;
                    let p = entries[entries.len() - 1].0;
                    for (off, &(k, _)) in entries.iter().enumerate() {
                        if k != q + off {
                            return Err(InstanceError::KRangeGap {
                                customer: c.id,
                                k: q + off,
                            });
                        }
                    }
                    Service::Flexible {
                        q,
                        p,
                        tau: entries.into_iter().map(|(_, t)| t).collect(),
                    }
                };
                Ok(Customer {
                    id: c.id,
                    xy: Point::new(c.xy[0], c.xy[1]),
                    w: c.w,
                    service,
                })
            })
            .collect::<Result<Vec<_>, InstanceError>>()?;
        let inst = Instance::new(
            raw.name,
            raw.s,
            raw.m,
            Point::new(raw.depot[0], raw.depot[1]),
            customers,
            raw.truck_time,
            time_mode,
        )?;
        Ok(inst)
    }

    /// Canonical JSON: sorted keys, fixed layout, byte-stable.
    pub fn to_json(&self) -> String {
        let raw = RawInstance {
            customers: self
                .customers
                .iter()
                .map(|c| {
                    let (truck_only, drone_time) = match &c.service {
                        Service::TruckOnly => (true, DroneTimes(Vec::new())),
                        Service::Flexible { q, p: _, tau } => (
                            false,
                            DroneTimes(
                                tau.iter().enumerate().map(|(off, &t)| (q + off, t)).collect(),
                            ),
                        ),
                    };
                    RawCustomer {
                        drone_time,
                        id: c.id,
                        truck_only,
                        w: c.w,
                        xy: [c.xy.x, c.xy.y],
                    }
                })
                .collect(),
            depot: [self.depot.x, self.depot.y],
            m: self.m,
            n: self.n(),
            name: self.name.clone(),
            s: self.s,
            truck_time: self.explicit_matrix.then(|| self.truck.rows()),
            units: Units {
                dist: "km".into(),
                time: match self.time_mode {
                    TimeMode::WholeMin => "min".into(),
                    TimeMode::ExactMin => "min-exact".into(),
                },
            },
        };
        let mut out = serde_json::to_string_pretty(&raw).expect("instance serializes");
        out.push('\n');
        out
    }
}

fn validate_matrix(mat: &TimeMatrix) -> Result<(), InstanceError> {
    let n = mat.n;
    for i in 0..=n {
        if !mat.get(i, i).is_zero() {
            return Err(InstanceError::NonzeroDiagonal { i });
        }
        for j in 0..=n {
            if mat.get(i, j).is_negative() {
                return Err(InstanceError::NegativeTime { i, j });
            }
        }
    }
    for i in 0..=n {
        for j in 0..=n {
            let leg = mat.get(i, j);
            for k in 0..=n {
                if mat.get(i, k) > leg + mat.get(j, k) {
                    return Err(InstanceError::Triangle { i, j, k });
                }
            }
        }
    }
    Ok(())
}

// ---- canonical JSON layer ----------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    customers: Vec<RawCustomer>,
    depot: [f64; 2],
    m: usize,
    n: usize,
    name: String,
    s: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    truck_time: Option<Vec<Vec<Minutes>>>,
    #[serde(default)]
    units: Units,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCustomer {
    #[serde(skip_serializing_if = "drone_times_empty", default)]
    drone_time: DroneTimes,
    id: NodeId,
    #[serde(default)]
    truck_only: bool,
    w: f64,
    xy: [f64; 2],
}

fn drone_times_empty(d: &DroneTimes) -> bool {
    d.0.is_empty()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Units {
    dist: String,
    time: String,
}

impl Default for Units {
    fn default() -> Units {
        Units {
            dist: "km".into(),
            time: "min".into(),
        }
    }
}

/// Group-size table keyed by numeric strings, kept in ascending numeric
/// order so the emitted JSON is canonical.
#[derive(Default)]
struct DroneTimes(Vec<(usize, Minutes)>);

impl Serialize for DroneTimes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, t) in &self.0 {
            map.serialize_entry(&k.to_string(), t)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DroneTimes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = DroneTimes;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from group size to minutes")
            }
            fn visit_map<A: de::MapAccess<'de>>(self, mut map: A) -> Result<DroneTimes, A::Error> {
                let mut entries: Vec<(usize, Minutes)> = Vec::new();
                while let Some((key, val)) = map.next_entry::<String, Minutes>()? {
                    let k: usize = key
                        .parse()
                        .map_err(|_| de::Error::custom(format!("bad group size key {key:?}")))?;
                    if entries.iter().any(|&(seen, _)| seen == k) {
                        return Err(de::Error::custom(format!("repeated group size {k}")));
                    }
                    entries.push((k, val));
                }
                entries.sort_by_key(|&(k, _)| k);
                Ok(DroneTimes(entries))
            }
        }
        deserializer.deserialize_map(V)
    }
}

// ---- generator ----------------------------------------------------------

/// Knobs for [`generate`]. `Default` gives a 10 km square on a half-km
/// grid, one fifth of customers truck-only.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub truck_only_frac: f64,
    pub area_km: f64,
    /// Largest minimum group size drawn for a customer.
    pub q_hi: usize,
    /// Cap on the maximum group size (further capped by `m`).
    pub p_cap: usize,
}

impl GenConfig {
    pub fn new(n: usize, m: usize, s: usize) -> GenConfig {
        GenConfig {
            name: None,
            n,
            m,
            s,
            truck_only_frac: 0.2,
            area_km: 10.0,
            q_hi: 2,
            p_cap: usize::MAX,
        }
    }
}

#[derive(Error, Debug, PartialEq)]
pub enum GenError {
    #[error("generator needs n >= 1, m >= 1, s >= 1")]
    EmptyConfig,
    #[error("truck_only_frac {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("requested group bounds q_hi = {q_hi} exceed p cap {p_cap}")]
    GroupBounds { q_hi: usize, p_cap: usize },
    #[error("area_km {0} too small for the coordinate grid")]
    BadArea(f64),
}

/// Base cruise speed of a single drone, km/h; each added drone in a group
/// shares lift and battery, adding 10 km/h.
fn drone_speed_kmh(k: usize) -> f64 {
    40.0 + 10.0 * (k as f64 - 1.0)
}

/// Deterministic random instance: same `(cfg, seed)`, same instance.
///
/// Coordinates snap to a half-km grid so every Manhattan leg at 30 km/h
/// is a whole number of minutes. Mission durations are round-trip
/// Euclidean times at [`drone_speed_kmh`], rounded up, floored at one
/// minute of service overhead, then forced strictly decreasing in the
/// group size (a bigger group is always strictly faster).
pub fn generate(cfg: &GenConfig, seed: u64) -> Result<Instance, GenError> {
    if cfg.n == 0 || cfg.m == 0 || cfg.s == 0 {
        return Err(GenError::EmptyConfig);
    }
    if !(0.0..=1.0).contains(&cfg.truck_only_frac) {
        return Err(GenError::BadFraction(cfg.truck_only_frac));
    }
    let p_cap = cfg.p_cap.min(cfg.m);
    if cfg.q_hi > p_cap {
        return Err(GenError::GroupBounds {
            q_hi: cfg.q_hi,
            p_cap,
        });
    }
    let steps = (cfg.area_km / 0.5).floor() as i64;
    if steps < 1 {
        return Err(GenError::BadArea(cfg.area_km));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = |v: i64| v as f64 * 0.5;
    let depot = Point::new(grid(steps / 2), grid(steps / 2));
    let mut customers = Vec::with_capacity(cfg.n);
    for id in 1..=cfg.n {
        let xy = Point::new(
            grid(rng.random_range(0..=steps)),
            grid(rng.random_range(0..=steps)),
        );
        let w = 0.25 * rng.random_range(1..=20i64) as f64;
        let service = if rng.random_bool(cfg.truck_only_frac) {
            Service::TruckOnly
        } else {
            let q = rng.random_range(1..=cfg.q_hi);
            let p = rng.random_range(q..=p_cap);
            let out_and_back = 2.0 * euclid_km(depot, xy);
            let mut tau: Vec<i64> = (q..=p)
                .map(|k| ((out_and_back / drone_speed_kmh(k) * 60.0).ceil() as i64).max(1))
                .collect();
            for i in (0..tau.len().saturating_sub(1)).rev() {
                tau[i] = tau[i].max(tau[i + 1] + 1);
            }
            Service::Flexible {
                q,
                p,
                tau: tau.into_iter().map(Minutes::from_int).collect(),
            }
        };
        customers.push(Customer {
            id,
            xy,
            w,
            service,
        });
    }

    let name = cfg
        .name
        .clone()
        .unwrap_or_else(|| format!("gen-n{}-m{}-s{}-{}", cfg.n, cfg.m, cfg.s, seed));
    let inst = Instance::new(
        name,
        cfg.s,
        cfg.m,
        depot,
        customers,
        None,
        TimeMode::WholeMin,
    )
    .expect("generated instances are valid by construction");
    Ok(inst)
}

// ---- plain-text converter ----------------------------------------------

/// Best-effort reader for whitespace table exports of public benchmark
/// sets. Expected layout, `#` starting a comment line:
///
/// ```text
/// n m s
/// depot_x depot_y
/// id x y w truck_only q p tau_q .. tau_p     (n lines; q p tau… absent
///                                             when truck_only is 1)
/// ```
///
/// Converted files should be re-checked against their source; the JSON
/// form is the canonical one.
pub fn from_benchmark_text(name: &str, text: &str) -> Result<Instance, ParseError> {
    let fail = |line: usize, msg: &str| ParseError::Text {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, head) = lines.next().ok_or_else(|| fail(0, "empty file"))?;
    let head: Vec<usize> = head
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| fail(ln, "expected `n m s`")))
        .collect::<Result<_, _>>()?;
    let [n, m, s] = head[..] else {
        return Err(fail(ln, "expected `n m s`"));
    };

    let (ln, dep) = lines.next().ok_or_else(|| fail(0, "missing depot line"))?;
    let dep: Vec<f64> = dep
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| fail(ln, "expected `depot_x depot_y`")))
        .collect::<Result<_, _>>()?;
    let [dx, dy] = dep[..] else {
        return Err(fail(ln, "expected `depot_x depot_y`"));
    };

    let mut customers = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) = lines.next().ok_or_else(|| fail(0, "missing customer line"))?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(fail(ln, "customer line too short"));
        }
        let id: NodeId = toks[0].parse().map_err(|_| fail(ln, "bad id"))?;
        let x: f64 = toks[1].parse().map_err(|_| fail(ln, "bad x"))?;
        let y: f64 = toks[2].parse().map_err(|_| fail(ln, "bad y"))?;
        let w: f64 = toks[3].parse().map_err(|_| fail(ln, "bad w"))?;
        let truck_only: u8 = toks[4].parse().map_err(|_| fail(ln, "bad truck_only"))?;
        let service = if truck_only == 1 {
            Service::TruckOnly
        } else {
            if toks.len() < 7 {
                return Err(fail(ln, "flexible customer needs `q p tau...`"));
            }
            let q: usize = toks[5].parse().map_err(|_| fail(ln, "bad q"))?;
            let p: usize = toks[6].parse().map_err(|_| fail(ln, "bad p"))?;
            let tau: Vec<Minutes> = toks[7..]
                .iter()
                .map(|t| {
                    t.parse::<i64>()
                        .map(Minutes::from_int)
                        .map_err(|_| fail(ln, "bad tau"))
                })
                .collect::<Result<_, _>>()?;
            if tau.len() != p.saturating_sub(q) + 1 {
                return Err(fail(ln, "tau count does not match q..=p"));
            }
            Service::Flexible { q, p, tau }
        };
        customers.push(Customer {
            id,
            xy: Point::new(x, y),
            w,
            service,
        });
    }

    let inst = Instance::new(
        name,
        s,
        m,
        Point::new(dx, dy),
        customers,
        None,
        TimeMode::WholeMin,
    )?;
    Ok(inst)
}
