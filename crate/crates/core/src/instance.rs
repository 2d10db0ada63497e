//! Problem data: locations, the asymmetric cost matrix with forbidden arcs,
//! the benchmark generator and the JSON instance format.
//!
//! Location indices are global and ordered: visiting nodes `0..N`, depots
//! `N..N+D`, charging stations `N+D..N+D+M`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Mean Earth radius used by [`geo_distance`].
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Width of the boundary band (fraction of each bbox side) where charging
/// stations are placed.
pub const PERIPHERY_MARGIN: f64 = 0.15;

/// Upper bound accepted for the forbidden-arc fraction.
pub const MAX_FORBIDDEN_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("range error: {0}")]
    Range(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("infeasible instance: {0}")]
    InfeasibleInstance(String),
    #[error("invalid bounding box: {0}")]
    InvalidBbox(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A validated latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, InstanceError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(InstanceError::Range(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(InstanceError::Range(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Great-circle distance in meters (haversine, spherical Earth).
pub fn geo_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s_phi = (dphi / 2.0).sin();
    let s_lambda = (dlambda / 2.0).sin();
    let h = s_phi * s_phi + phi1.cos() * phi2.cos() * s_lambda * s_lambda;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseCase {
    /// Two drones sharing one depot, closed tours.
    Uc1,
    /// Two drones with their own depots, closed tours.
    Uc2,
    /// Two depots, open routes ending at a charging station.
    Uc3,
}

impl UseCase {
    pub const ALL: [UseCase; 3] = [UseCase::Uc1, UseCase::Uc2, UseCase::Uc3];

    pub fn number(self) -> u8 {
        match self {
            UseCase::Uc1 => 1,
            UseCase::Uc2 => 2,
            UseCase::Uc3 => 3,
        }
    }

    pub fn depot_count(self) -> usize {
        match self {
            UseCase::Uc1 => 1,
            UseCase::Uc2 | UseCase::Uc3 => 2,
        }
    }

    pub fn charging_count(self, n: usize) -> usize {
        match self {
            UseCase::Uc3 => n / 3,
            _ => 0,
        }
    }

    /// Whether routes return to their depot.
    pub fn closed_routes(self) -> bool {
        !matches!(self, UseCase::Uc3)
    }

    /// Benchmark name, e.g. `UC1_12`.
    pub fn instance_name(self, n: usize) -> String {
        format!("UC{}_{}", self.number(), n)
    }
}

impl fmt::Display for UseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uc{}", self.number())
    }
}

impl FromStr for UseCase {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uc1" | "1" => Ok(UseCase::Uc1),
            "uc2" | "2" => Ok(UseCase::Uc2),
            "uc3" | "3" => Ok(UseCase::Uc3),
            other => Err(InstanceError::Schema(format!("unknown use case `{other}`"))),
        }
    }
}

/// Square, possibly asymmetric travel-cost matrix.
///
/// Forbidden arcs keep their raw entry but [`CostMatrix::cost`] reports them
/// at `big_m`, a finite surrogate for infinity larger than ten times the sum
/// of all finite entries. Any route using a forbidden arc therefore costs at
/// least `big_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    entries: Vec<f64>,
    forbidden: BTreeSet<(usize, usize)>,
    big_m: f64,
}

impl CostMatrix {
    /// Validates entries and forbidden arcs; the finite arcs must keep every
    /// location reachable from every other.
    pub fn new(
        size: usize,
        entries: Vec<f64>,
        forbidden: BTreeSet<(usize, usize)>,
    ) -> Result<Self, InstanceError> {
        if entries.len() != size * size {
            return Err(InstanceError::Schema(format!(
                "cost matrix has {} entries, expected {}",
                entries.len(),
                size * size
            )));
        }
        for i in 0..size {
            for j in 0..size {
                let c = entries[i * size + j];
                if !c.is_finite() || c < 0.0 {
                    return Err(InstanceError::Range(format!(
                        "cost entry ({i},{j}) = {c} is not a finite non-negative value"
                    )));
                }
                if i == j && c != 0.0 {
                    return Err(InstanceError::Range(format!(
                        "diagonal cost entry ({i},{i}) = {c} must be 0"
                    )));
                }
            }
        }
        for &(i, j) in &forbidden {
            if i >= size || j >= size {
                return Err(InstanceError::Schema(format!(
                    "forbidden arc ({i},{j}) references a location outside 0..{size}"
                )));
            }
            if i == j {
                return Err(InstanceError::Schema(format!(
                    "forbidden arc ({i},{i}) is a self loop"
                )));
            }
        }
        if !strongly_connected(size, &forbidden) {
            return Err(InstanceError::InfeasibleInstance(
                "forbidden arcs disconnect the location graph".into(),
            ));
        }
        let finite_total: f64 = (0..size)
            .flat_map(|i| (0..size).map(move |j| (i, j)))
            .filter(|p| !forbidden.contains(p))
            .map(|(i, j)| entries[i * size + j])
            .sum();
        let big_m = 10.0 * finite_total + 1.0;
        Ok(Self {
            size,
            entries,
            forbidden,
            big_m,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Travel cost from `i` to `j`; `big_m` for forbidden arcs.
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        if self.is_forbidden(i, j) {
            self.big_m
        } else {
            self.entries[i * self.size + j]
        }
    }

    /// Stored entry, ignoring the forbidden marker.
    pub fn raw(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        !self.forbidden.is_empty() && self.forbidden.contains(&(i, j))
    }

    pub fn forbidden(&self) -> &BTreeSet<(usize, usize)> {
        &self.forbidden
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }
}

fn strongly_connected(size: usize, forbidden: &BTreeSet<(usize, usize)>) -> bool {
    if size <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; size];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..size {
                let arc = if forward { (u, v) } else { (v, u) };
                if u != v && !seen[v] && !forbidden.contains(&arc) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(true) && reach(false)
}

/// Builds a cost matrix from pairwise haversine distances.
///
/// Each ordered pair gets `d(i,j) * (1 + u)` with `u ~ U[0, asymmetry)` drawn
/// independently, so `asymmetry = 0` yields an exactly symmetric matrix. A
/// `forbidden_fraction` of the ordered pairs that touch no location in
/// `depots` is then marked forbidden, skipping any arc whose removal would
/// leave the finite-arc graph not strongly connected.
pub fn build_cost_matrix(
    points: &[GeoPoint],
    asymmetry: f64,
    forbidden_fraction: f64,
    depots: &[usize],
    seed: u64,
) -> Result<CostMatrix, InstanceError> {
    if !asymmetry.is_finite() || asymmetry < 0.0 {
        return Err(InstanceError::InvalidParameter(format!(
            "asymmetry must be finite and >= 0, got {asymmetry}"
        )));
    }
    if !(0.0..=MAX_FORBIDDEN_FRACTION).contains(&forbidden_fraction) {
        return Err(InstanceError::InvalidParameter(format!(
            "forbidden fraction must lie in [0, {MAX_FORBIDDEN_FRACTION}], got {forbidden_fraction}"
        )));
    }
    let size = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i != j {
                let u: f64 = rng.random();
                entries[i * size + j] = geo_distance(points[i], points[j]) * (1.0 + asymmetry * u);
            }
        }
    }

    let mut eligible: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !depots.contains(&i) && !depots.contains(&j))
        .collect();
    let target = (forbidden_fraction * eligible.len() as f64).round() as usize;
    eligible.shuffle(&mut rng);
    let mut forbidden = BTreeSet::new();
    for arc in eligible {
        if forbidden.len() == target {
            break;
        }
        forbidden.insert(arc);
        if !strongly_connected(size, &forbidden) {
            forbidden.remove(&arc);
        }
    }
    if forbidden.len() < target {
        log::warn!(
            "only {} of {} requested forbidden arcs could be placed without disconnecting",
            forbidden.len(),
            target
        );
    }
    CostMatrix::new(size, entries, forbidden)
}

/// Latitude/longitude rectangle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let vals = [self.lat_min, self.lat_max, self.lon_min, self.lon_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(InstanceError::InvalidBbox("non-finite bound".into()));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 || self.lon_min < -180.0 || self.lon_max > 180.0
        {
            return Err(InstanceError::InvalidBbox(format!("{self:?} exceeds coordinate ranges")));
        }
        if self.lat_min >= self.lat_max || self.lon_min >= self.lon_max {
            return Err(InstanceError::InvalidBbox(format!("{self:?} is empty")));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> GeoPoint {
        let lat = self.lat_min + (self.lat_max - self.lat_min) * rng.random::<f64>();
        let lon = self.lon_min + (self.lon_max - self.lon_min) * rng.random::<f64>();
        GeoPoint { lat, lon }
    }

    /// Whether `p` lies in the outer band of relative width `margin`.
    pub fn in_band(&self, p: GeoPoint, margin: f64) -> bool {
        let dlat = (self.lat_max - self.lat_min) * margin;
        let dlon = (self.lon_max - self.lon_min) * margin;
        p.lat < self.lat_min + dlat
            || p.lat > self.lat_max - dlat
            || p.lon < self.lon_min + dlon
            || p.lon > self.lon_max - dlon
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat) && (self.lon_min..=self.lon_max).contains(&p.lon)
    }
}

impl Default for BoundingBox {
    /// Roughly 15 km x 16 km of the Bilbao metropolitan area.
    fn default() -> Self {
        Self {
            lat_min: 43.20,
            lat_max: 43.34,
            lon_min: -3.05,
            lon_max: -2.85,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub bbox: BoundingBox,
    pub asymmetry: f64,
    pub forbidden_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            bbox: BoundingBox::default(),
            asymmetry: 0.2,
            forbidden_fraction: 0.05,
        }
    }
}

/// A routing instance for two drones.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    use_case: UseCase,
    seed: u64,
    visiting: Vec<GeoPoint>,
    depots: Vec<GeoPoint>,
    charging: Vec<GeoPoint>,
    costs: CostMatrix,
}

impl Instance {
    pub fn new(
        use_case: UseCase,
        seed: u64,
        visiting: Vec<GeoPoint>,
        depots: Vec<GeoPoint>,
        charging: Vec<GeoPoint>,
        costs: CostMatrix,
    ) -> Result<Self, InstanceError> {
        let n = visiting.len();
        if n < 4 {
            return Err(InstanceError::Schema(format!(
                "at least 4 visiting points required, got {n}"
            )));
        }
        if depots.len() != use_case.depot_count() {
            return Err(InstanceError::Schema(format!(
                "{use_case} requires {} depot(s), got {}",
                use_case.depot_count(),
                depots.len()
            )));
        }
        if charging.len() != use_case.charging_count(n) {
            return Err(InstanceError::Schema(format!(
                "{use_case} with {n} visiting points requires {} charging station(s), got {}",
                use_case.charging_count(n),
                charging.len()
            )));
        }
        let total = n + depots.len() + charging.len();
        if costs.size() != total {
            return Err(InstanceError::Schema(format!(
                "cost matrix size {} does not match {total} locations",
                costs.size()
            )));
        }
        Ok(Self {
            use_case,
            seed,
            visiting,
            depots,
            charging,
            costs,
        })
    }

    pub fn use_case(&self) -> UseCase {
        self.use_case
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of visiting points.
    pub fn n(&self) -> usize {
        self.visiting.len()
    }

    pub fn visiting(&self) -> &[GeoPoint] {
        &self.visiting
    }

    pub fn depots(&self) -> &[GeoPoint] {
        &self.depots
    }

    pub fn charging(&self) -> &[GeoPoint] {
        &self.charging
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn location_count(&self) -> usize {
        self.costs.size()
    }

    /// Global index of depot `k`.
    pub fn depot_index(&self, k: usize) -> usize {
        self.n() + k
    }

    pub fn depot_indices(&self) -> std::ops::Range<usize> {
        self.n()..self.n() + self.depots.len()
    }

    pub fn charging_indices(&self) -> std::ops::Range<usize> {
        let start = self.n() + self.depots.len();
        start..start + self.charging.len()
    }

    pub fn location(&self, idx: usize) -> GeoPoint {
        let n = self.n();
        let d = self.depots.len();
        if idx < n {
            self.visiting[idx]
        } else if idx < n + d {
            self.depots[idx - n]
        } else {
            self.charging[idx - n - d]
        }
    }

    pub fn name(&self) -> String {
        self.use_case.instance_name(self.n())
    }
}

/// Generates a benchmark instance. Visiting points and depots are uniform in
/// the bounding box; charging stations are uniform over its outer band.
pub fn generate_instance(
    use_case: UseCase,
    n: usize,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<Instance, InstanceError> {
    cfg.bbox.validate()?;
    if n < 4 {
        return Err(InstanceError::InvalidParameter(format!(
            "at least 4 visiting points required, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let visiting: Vec<GeoPoint> = (0..n).map(|_| cfg.bbox.sample(&mut rng)).collect();
    let mut depots: Vec<GeoPoint> = Vec::with_capacity(use_case.depot_count());
    while depots.len() < use_case.depot_count() {
        let p = cfg.bbox.sample(&mut rng);
        if !depots.contains(&p) {
            depots.push(p);
        }
    }
    let m = use_case.charging_count(n);
    let mut charging = Vec::with_capacity(m);
    while charging.len() < m {
        let p = cfg.bbox.sample(&mut rng);
        if cfg.bbox.in_band(p, PERIPHERY_MARGIN) {
            charging.push(p);
        }
    }
    let all: Vec<GeoPoint> = visiting
        .iter()
        .chain(&depots)
        .chain(&charging)
        .copied()
        .collect();
    let depot_idx: Vec<usize> = (n..n + depots.len()).collect();
    let cost_seed = rng.random::<u64>();
    let costs = build_cost_matrix(&all, cfg.asymmetry, cfg.forbidden_fraction, &depot_idx, cost_seed)?;
    Instance::new(use_case, seed, visiting, depots, charging, costs)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostMatrixFile {
    size: usize,
    entries: Vec<Vec<f64>>,
    forbidden: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    use_case: UseCase,
    seed: u64,
    visiting: Vec<[f64; 2]>,
    depots: Vec<[f64; 2]>,
    charging: Vec<[f64; 2]>,
    cost_matrix: CostMatrixFile,
}

const INSTANCE_KEYS: [&str; 6] = ["use_case", "seed", "visiting", "depots", "charging", "cost_matrix"];
const COST_KEYS: [&str; 3] = ["size", "entries", "forbidden"];

impl Instance {
    pub fn to_json(&self) -> String {
        let pts = |v: &[GeoPoint]| v.iter().map(|p| [p.lat, p.lon]).collect::<Vec<_>>();
        let size = self.costs.size();
        let file = InstanceFile {
            use_case: self.use_case,
            seed: self.seed,
            visiting: pts(&self.visiting),
            depots: pts(&self.depots),
            charging: pts(&self.charging),
            cost_matrix: CostMatrixFile {
                size,
                entries: (0..size).map(|i| self.costs.row(i).to_vec()).collect(),
                forbidden: self.costs.forbidden().iter().map(|&(i, j)| [i, j]).collect(),
            },
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let value: Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| InstanceError::Schema("top level must be an object".into()))?;
        for key in INSTANCE_KEYS {
            if !obj.contains_key(key) {
                return Err(InstanceError::MissingField(key.into()));
            }
        }
        if let Some(cm) = obj["cost_matrix"].as_object() {
            for key in COST_KEYS {
                if !cm.contains_key(key) {
                    return Err(InstanceError::MissingField(format!("cost_matrix.{key}")));
                }
            }
        }
        let file: InstanceFile =
            serde_json::from_value(value).map_err(|e| InstanceError::Schema(e.to_string()))?;
        let pts = |v: &[[f64; 2]]| {
            v.iter()
                .map(|&[lat, lon]| GeoPoint::new(lat, lon))
                .collect::<Result<Vec<_>, _>>()
        };
        let visiting = pts(&file.visiting)?;
        let depots = pts(&file.depots)?;
        let charging = pts(&file.charging)?;
        let size = file.cost_matrix.size;
        if file.cost_matrix.entries.len() != size
            || file.cost_matrix.entries.iter().any(|r| r.len() != size)
        {
            return Err(InstanceError::Schema(format!(
                "cost_matrix.entries must be a {size}x{size} array"
            )));
        }
        let entries = file.cost_matrix.entries.into_iter().flatten().collect();
        let forbidden = file
            .cost_matrix
            .forbidden
            .iter()
            .map(|&[i, j]| (i, j))
            .collect();
        let costs = CostMatrix::new(size, entries, forbidden)?;
        Instance::new(file.use_case, file.seed, visiting, depots, charging, costs)
    }
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    std::fs::write(path, inst.to_json()).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Instance::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn distance_identity_and_quarter_meridian() {
        assert_eq!(geo_distance(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
        // pi/2 * R, evaluated by hand: 10_007_543.398...
        let d = geo_distance(pt(0.0, 0.0), pt(0.0, 90.0));
        assert!((d - 10_007_543.398).abs() < 1e-2, "{d}");
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = pt(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
            let b = pt(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
            assert_eq!(geo_distance(a, b), geo_distance(b, a));
        }
    }

    #[test]
    fn rejects_out_of_range_points() {
        assert!(matches!(GeoPoint::new(91.0, 0.0), Err(InstanceError::Range(_))));
        assert!(matches!(GeoPoint::new(0.0, -180.5), Err(InstanceError::Range(_))));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    fn grid(n: usize) -> Vec<GeoPoint> {
        (0..n)
            .map(|k| pt(43.2 + 0.01 * (k / 4) as f64, -3.0 + 0.013 * (k % 4) as f64))
            .collect()
    }

    #[test]
    fn zero_asymmetry_gives_haversine_matrix() {
        let pts = grid(8);
        let cm = build_cost_matrix(&pts, 0.0, 0.0, &[], 1).unwrap();
        for i in 0..8 {
            assert_eq!(cm.cost(i, i), 0.0);
            for j in 0..8 {
                assert_eq!(cm.cost(i, j), geo_distance(pts[i], pts[j]));
                assert_eq!(cm.cost(i, j), cm.cost(j, i));
            }
        }
    }

    #[test]
    fn asymmetry_stays_within_bounds() {
        let pts = grid(12);
        let cm = build_cost_matrix(&pts, 0.2, 0.0, &[], 7).unwrap();
        let mut asymmetric = false;
        for i in 0..12 {
            for j in 0..12 {
                if i == j {
                    continue;
                }
                let d = geo_distance(pts[i], pts[j]);
                let c = cm.cost(i, j);
                assert!(c >= d && c <= 1.2 * d, "({i},{j}) {c} vs {d}");
                asymmetric |= c != cm.cost(j, i);
            }
        }
        assert!(asymmetric);
    }

    #[test]
    fn same_seed_same_matrix() {
        let pts = grid(10);
        let a = build_cost_matrix(&pts, 0.3, 0.05, &[8, 9], 11).unwrap();
        let b = build_cost_matrix(&pts, 0.3, 0.05, &[8, 9], 11).unwrap();
        assert_eq!(a, b);
        let c = build_cost_matrix(&pts, 0.3, 0.05, &[8, 9], 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forbidden_arcs_avoid_depots_and_cost_big_m() {
        let pts = grid(12);
        let cm = build_cost_matrix(&pts, 0.1, 0.1, &[10, 11], 5).unwrap();
        // 10 * 9 ordered non-depot pairs, 10% of them
        assert_eq!(cm.forbidden().len(), 9);
        let finite: f64 = (0..12)
            .flat_map(|i| (0..12).map(move |j| (i, j)))
            .filter(|&(i, j)| !cm.is_forbidden(i, j))
            .map(|(i, j)| cm.raw(i, j))
            .sum();
        assert!(cm.big_m() > 10.0 * finite);
        for &(i, j) in cm.forbidden() {
            assert!(i < 10 && j < 10);
            assert_eq!(cm.cost(i, j), cm.big_m());
        }
    }

    #[test]
    fn disconnecting_forbidden_set_is_rejected() {
        let mut entries = vec![1.0; 9];
        for i in 0..3 {
            entries[i * 3 + i] = 0.0;
        }
        let forbidden = BTreeSet::from([(0, 1), (0, 2)]);
        assert!(matches!(
            CostMatrix::new(3, entries, forbidden),
            Err(InstanceError::InfeasibleInstance(_))
        ));
    }

    #[test]
    fn invalid_fraction_rejected() {
        assert!(build_cost_matrix(&grid(5), 0.0, 0.2, &[], 0).is_err());
        assert!(build_cost_matrix(&grid(5), -1.0, 0.0, &[], 0).is_err());
    }

    #[test]
    fn generator_counts_per_use_case() {
        let cfg = GeneratorConfig::default();
        let uc1 = generate_instance(UseCase::Uc1, 12, 3, &cfg).unwrap();
        assert_eq!((uc1.n(), uc1.depots().len(), uc1.charging().len()), (12, 1, 0));
        let uc3 = generate_instance(UseCase::Uc3, 12, 3, &cfg).unwrap();
        assert_eq!(uc3.charging().len(), 4);
        assert_eq!(uc3.charging_indices(), 14..18);
        for p in uc3.charging() {
            assert!(cfg.bbox.in_band(*p, PERIPHERY_MARGIN));
        }
        let uc2 = generate_instance(UseCase::Uc2, 16, 3, &cfg).unwrap();
        assert_eq!(uc2.depots().len(), 2);
        assert_ne!(uc2.depots()[0], uc2.depots()[1]);
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let a = generate_instance(UseCase::Uc3, 16, 99, &cfg).unwrap();
        let b = generate_instance(UseCase::Uc3, 16, 99, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_rejects_bad_bbox() {
        let mut cfg = GeneratorConfig::default();
        cfg.bbox.lat_max = cfg.bbox.lat_min;
        assert!(matches!(
            generate_instance(UseCase::Uc1, 12, 0, &cfg),
            Err(InstanceError::InvalidBbox(_))
        ));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let inst = generate_instance(UseCase::Uc1, 12, 7, &GeneratorConfig::default()).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn json_errors_are_distinct() {
        let inst = generate_instance(UseCase::Uc1, 12, 7, &GeneratorConfig::default()).unwrap();
        let mut v: Value = serde_json::from_str(&inst.to_json()).unwrap();

        let mut bad_lat = v.clone();
        bad_lat["visiting"][0][0] = 91.0.into();
        assert!(matches!(
            Instance::from_json(&bad_lat.to_string()),
            Err(InstanceError::Range(_))
        ));

        let mut two_depots = v.clone();
        two_depots["depots"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!([43.25, -2.9]));
        assert!(matches!(
            Instance::from_json(&two_depots.to_string()),
            Err(InstanceError::Schema(_))
        ));

        v.as_object_mut().unwrap().remove("charging");
        match Instance::from_json(&v.to_string()) {
            Err(InstanceError::MissingField(f)) => assert_eq!(f, "charging"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
