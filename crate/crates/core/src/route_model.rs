//! Node-based binary routing models.
//!
//! Binary `x[i][p]` is 1 when visiting node `i` (1-based, local to the
//! subproblem) is visited at position `p` (1-based); the depot is node 0,
//! fixed at position 0 and substituted out. Open routes add one binary
//! `y[j]` per charging station `j` (1-based) selecting the end point.
//!
//! Local location indices mirror the model: `0` is the depot, `1..=n` the
//! cluster nodes and `n+1..=n+m` the stations, so station `j` sits at local
//! index `j + n`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::assignment::Subproblem;
use crate::instance::{CostMatrix, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Depot, every node once, back to the depot.
    ClosedTour,
    /// Depot, every node once, then exactly one charging station.
    OpenCharging,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::ClosedTour => "closed_tour",
            ModelKind::OpenCharging => "open_charging",
        })
    }
}

/// A single equality `sum(vars) = 1` and what it enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Node `i` occupies exactly one position.
    NodeOnce(usize),
    /// Position `p` holds exactly one node.
    PositionOnce(usize),
    /// Exactly one charging station ends the route.
    SingleStation,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::NodeOnce(i) => write!(f, "node_once({i})"),
            ConstraintKind::PositionOnce(p) => write!(f, "position_once({p})"),
            ConstraintKind::SingleStation => f.write_str("single_station"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    X { node: usize, position: usize },
    Y { station: usize },
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::X { node, position } => write!(f, "x[{node}][{position}]"),
            Variable::Y { station } => write!(f, "y[{station}]"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("infeasible assignment: {0} violated")]
    InfeasibleAssignment(ConstraintKind),
    #[error("assignment has {got} bits, model has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("route does not fit the model: {0}")]
    RouteMismatch(String),
    #[error("subproblem has no visiting nodes")]
    EmptyCluster,
    #[error("open route model needs at least one charging station")]
    NoStations,
}

/// `offset + sum h_i x_i + sum_{i<j} q_ij x_i x_j` over binaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadraticForm {
    pub linear: BTreeMap<usize, f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl QuadraticForm {
    pub fn add_linear(&mut self, v: usize, c: f64) {
        *self.linear.entry(v).or_insert(0.0) += c;
    }

    /// Adds `c x_a x_b`; `a == b` folds into the linear term since `x^2 = x`.
    pub fn add_quadratic(&mut self, a: usize, b: usize, c: f64) {
        if a == b {
            self.add_linear(a, c);
        } else {
            *self.quadratic.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
        }
    }

    pub fn evaluate(&self, x: &[bool]) -> f64 {
        let lin: f64 = self.linear.iter().filter(|(&v, _)| x[v]).map(|(_, c)| c).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .filter(|(&(a, b), _)| x[a] && x[b])
            .map(|(_, c)| c)
            .sum();
        self.offset + lin + quad
    }

    pub fn coefficient(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.linear.get(&a).copied().unwrap_or(0.0)
        } else {
            self.quadratic.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
        }
    }

    /// Smallest non-zero coefficient magnitude, if any.
    pub fn min_abs_coefficient(&self) -> Option<f64> {
        self.linear
            .values()
            .chain(self.quadratic.values())
            .map(|c| c.abs())
            .filter(|&c| c > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Penalty-folded model for samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboForm {
    pub form: QuadraticForm,
    pub num_vars: usize,
    pub penalty_weight: f64,
}

impl QuboForm {
    pub fn energy(&self, x: &[bool]) -> f64 {
        self.form.evaluate(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteEnd {
    Depot,
    /// Global index of the charging station.
    Charging(usize),
}

impl fmt::Display for RouteEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RouteEnd::Depot => f.write_str("depot"),
            RouteEnd::Charging(i) => write!(f, "charging:{i}"),
        }
    }
}

impl FromStr for RouteEnd {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "depot" {
            return Ok(RouteEnd::Depot);
        }
        s.strip_prefix("charging:")
            .and_then(|i| i.parse().ok())
            .map(RouteEnd::Charging)
            .ok_or_else(|| format!("invalid route end `{s}`"))
    }
}

impl Serialize for RouteEnd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RouteEnd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A drone route over global location indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Depot, visiting nodes in order, then the depot again or a station.
    pub sequence: Vec<usize>,
    pub cost: f64,
    pub end: RouteEnd,
}

impl Route {
    /// Visiting nodes in visit order.
    pub fn visiting(&self) -> &[usize] {
        if self.sequence.len() < 2 {
            &[]
        } else {
            &self.sequence[1..self.sequence.len() - 1]
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sequence.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Sum of arc costs along the route, forbidden arcs counted at `big_m`.
pub fn route_cost(route: &Route, costs: &CostMatrix) -> f64 {
    route.arcs().map(|(a, b)| costs.cost(a, b)).sum()
}

/// Binary optimization model for one subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteModel {
    kind: ModelKind,
    cluster: Vec<usize>,
    depot: usize,
    stations: Vec<usize>,
    /// Local arc costs, `(1 + n + m)^2`, row-major.
    local_costs: Vec<f64>,
    local_forbidden: Vec<bool>,
    big_m: f64,
    objective: QuadraticForm,
    constraints: Vec<Constraint>,
}

/// Builds the node-based model for `sub`.
///
/// Objective: `sum_i c(0,i) x[i][1]`, plus `c(i,j) x[i][p] x[j][p+1]` for
/// consecutive positions, plus either `c(i,0) x[i][n]` (closed) or
/// `c(i, j+n) x[i][n] y[j]` (open). Constraints: every node once, every
/// position once, and one station when open.
pub fn build_model(sub: &Subproblem, inst: &Instance) -> Result<RouteModel, ModelError> {
    if sub.cluster.is_empty() {
        return Err(ModelError::EmptyCluster);
    }
    let kind = if sub.closed {
        ModelKind::ClosedTour
    } else {
        ModelKind::OpenCharging
    };
    let stations = if sub.closed { Vec::new() } else { sub.charging.clone() };
    if kind == ModelKind::OpenCharging && stations.is_empty() {
        return Err(ModelError::NoStations);
    }
    let locals: Vec<usize> = std::iter::once(sub.depot)
        .chain(sub.cluster.iter().copied())
        .chain(stations.iter().copied())
        .collect();
    let costs = inst.costs();
    let dim = locals.len();
    let mut local_costs = vec![0.0; dim * dim];
    let mut local_forbidden = vec![false; dim * dim];
    for (a, &ga) in locals.iter().enumerate() {
        for (b, &gb) in locals.iter().enumerate() {
            if a != b {
                local_costs[a * dim + b] = costs.cost(ga, gb);
                local_forbidden[a * dim + b] = costs.is_forbidden(ga, gb);
            }
        }
    }
    let mut model = RouteModel {
        kind,
        cluster: sub.cluster.clone(),
        depot: sub.depot,
        stations,
        local_costs,
        local_forbidden,
        big_m: costs.big_m(),
        objective: QuadraticForm::default(),
        constraints: Vec::new(),
    };
    model.objective = model.build_objective();
    model.constraints = model.build_constraints();
    Ok(model)
}

impl RouteModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Visiting nodes in the subproblem.
    pub fn n(&self) -> usize {
        self.cluster.len()
    }

    /// Charging stations in the model (0 for closed tours).
    pub fn m(&self) -> usize {
        self.stations.len()
    }

    pub fn num_vars(&self) -> usize {
        self.n() * self.n() + self.m()
    }

    pub fn cluster(&self) -> &[usize] {
        &self.cluster
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn stations(&self) -> &[usize] {
        &self.stations
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn objective(&self) -> &QuadraticForm {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Variable id of `x[node][position]`, both 1-based.
    pub fn x(&self, node: usize, position: usize) -> usize {
        debug_assert!((1..=self.n()).contains(&node) && (1..=self.n()).contains(&position));
        (node - 1) * self.n() + (position - 1)
    }

    /// Variable id of `y[station]`, 1-based.
    pub fn y(&self, station: usize) -> usize {
        debug_assert!((1..=self.m()).contains(&station));
        self.n() * self.n() + station - 1
    }

    pub fn variable(&self, id: usize) -> Variable {
        let n = self.n();
        if id < n * n {
            Variable::X {
                node: id / n + 1,
                position: id % n + 1,
            }
        } else {
            Variable::Y {
                station: id - n * n + 1,
            }
        }
    }

    fn dim(&self) -> usize {
        1 + self.n() + self.m()
    }

    /// Cost between local locations (`big_m` when forbidden).
    pub fn arc(&self, a: usize, b: usize) -> f64 {
        self.local_costs[a * self.dim() + b]
    }

    pub fn is_forbidden(&self, a: usize, b: usize) -> bool {
        self.local_forbidden[a * self.dim() + b]
    }

    /// Global index of a local location.
    pub fn global(&self, local: usize) -> usize {
        let n = self.n();
        match local {
            0 => self.depot,
            l if l <= n => self.cluster[l - 1],
            l => self.stations[l - n - 1],
        }
    }

    fn local_of(&self, global: usize) -> Option<usize> {
        if let Some(i) = self.cluster.iter().position(|&g| g == global) {
            return Some(i + 1);
        }
        self.stations
            .iter()
            .position(|&g| g == global)
            .map(|j| j + 1 + self.n())
    }

    /// Largest finite arc cost among the model's locations.
    pub fn max_finite_arc(&self) -> f64 {
        let d = self.dim();
        (0..d * d)
            .filter(|&k| !self.local_forbidden[k] && k / d != k % d)
            .map(|k| self.local_costs[k])
            .fold(0.0, f64::max)
    }

    /// Cheapest station (1-based) after local node `last`, with its arc cost.
    pub fn best_station(&self, last: usize) -> Option<(usize, f64)> {
        let n = self.n();
        (1..=self.m())
            .map(|j| (j, self.arc(last, j + n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Cost of visiting local nodes `order` (a permutation of `1..=n`);
    /// open routes end at `station`, or the cheapest one if `None`.
    pub fn order_cost(&self, order: &[usize], station: Option<usize>) -> f64 {
        let mut cost = self.arc(0, order[0]);
        for w in order.windows(2) {
            cost += self.arc(w[0], w[1]);
        }
        let last = order[order.len() - 1];
        cost + match self.kind {
            ModelKind::ClosedTour => self.arc(last, 0),
            ModelKind::OpenCharging => match station {
                Some(j) => self.arc(last, j + self.n()),
                None => self.best_station(last).map_or(0.0, |s| s.1),
            },
        }
    }

    /// Route for a local visiting order; see [`RouteModel::order_cost`].
    pub fn route_from_order(&self, order: &[usize], station: Option<usize>) -> Route {
        let last = order[order.len() - 1];
        let (end_local, end) = match self.kind {
            ModelKind::ClosedTour => (0, RouteEnd::Depot),
            ModelKind::OpenCharging => {
                let j = station
                    .or_else(|| self.best_station(last).map(|s| s.0))
                    .expect("open model has stations");
                let l = j + self.n();
                (l, RouteEnd::Charging(self.global(l)))
            }
        };
        let mut sequence = Vec::with_capacity(order.len() + 2);
        sequence.push(self.depot);
        sequence.extend(order.iter().map(|&i| self.global(i)));
        sequence.push(self.global(end_local));
        let cost = match self.kind {
            ModelKind::ClosedTour => self.order_cost(order, None),
            ModelKind::OpenCharging => self.order_cost(order, Some(end_local - self.n())),
        };
        Route { sequence, cost, end }
    }

    /// Whether any arc of the local `order` (including end arcs) is forbidden.
    pub fn order_uses_forbidden(&self, order: &[usize], station: Option<usize>) -> bool {
        let route = self.route_from_order(order, station);
        route.cost >= self.big_m
    }

    fn build_objective(&self) -> QuadraticForm {
        let n = self.n();
        let mut obj = QuadraticForm::default();
        for i in 1..=n {
            obj.add_linear(self.x(i, 1), self.arc(0, i));
        }
        for p in 1..n {
            for i in 1..=n {
                for j in 1..=n {
                    if i != j {
                        obj.add_quadratic(self.x(i, p), self.x(j, p + 1), self.arc(i, j));
                    }
                }
            }
        }
        match self.kind {
            ModelKind::ClosedTour => {
                for i in 1..=n {
                    obj.add_linear(self.x(i, n), self.arc(i, 0));
                }
            }
            ModelKind::OpenCharging => {
                for i in 1..=n {
                    for j in 1..=self.m() {
                        obj.add_quadratic(self.x(i, n), self.y(j), self.arc(i, j + n));
                    }
                }
            }
        }
        obj
    }

    fn build_constraints(&self) -> Vec<Constraint> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * n + 1);
        for i in 1..=n {
            out.push(Constraint {
                kind: ConstraintKind::NodeOnce(i),
                vars: (1..=n).map(|p| self.x(i, p)).collect(),
            });
        }
        for p in 1..=n {
            out.push(Constraint {
                kind: ConstraintKind::PositionOnce(p),
                vars: (1..=n).map(|i| self.x(i, p)).collect(),
            });
        }
        if self.kind == ModelKind::OpenCharging {
            out.push(Constraint {
                kind: ConstraintKind::SingleStation,
                vars: (1..=self.m()).map(|j| self.y(j)).collect(),
            });
        }
        out
    }

    /// Default penalty weight: `2 (n + 1)` times the largest finite arc, so a
    /// single violation outweighs any route made of finite arcs.
    pub fn default_penalty(&self) -> f64 {
        let lambda = 2.0 * (self.n() as f64 + 1.0) * self.max_finite_arc();
        if lambda > 0.0 {
            lambda
        } else {
            1.0
        }
    }

    /// Deterministic text listing of variables, objective terms and
    /// constraints.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "model {} n={} m={} depot={} cluster={:?} stations={:?}",
            self.kind,
            self.n(),
            self.m(),
            self.depot,
            self.cluster,
            self.stations
        );
        let _ = writeln!(out, "fixed x[0][0]=1");
        let _ = writeln!(out, "variables {}", self.num_vars());
        for v in 0..self.num_vars() {
            let _ = writeln!(out, "  v{v} {}", self.variable(v));
        }
        let _ = writeln!(
            out,
            "objective linear={} quadratic={} offset={:.6}",
            self.objective.linear.len(),
            self.objective.quadratic.len(),
            self.objective.offset
        );
        for (v, c) in &self.objective.linear {
            let _ = writeln!(out, "  {:.6} {}", c, self.variable(*v));
        }
        for ((a, b), c) in &self.objective.quadratic {
            let _ = writeln!(out, "  {:.6} {} {}", c, self.variable(*a), self.variable(*b));
        }
        let _ = writeln!(out, "constraints {}", self.constraints.len());
        for con in &self.constraints {
            let terms: Vec<String> = con.vars.iter().map(|&v| self.variable(v).to_string()).collect();
            let _ = writeln!(out, "  {}: {} = 1", con.kind, terms.join(" + "));
        }
        out
    }
}

/// Folds every constraint into the objective as `lambda (sum vars - 1)^2`
/// with the default penalty weight.
pub fn to_qubo(model: &RouteModel) -> QuboForm {
    to_qubo_with_penalty(model, model.default_penalty())
}

pub fn to_qubo_with_penalty(model: &RouteModel, lambda: f64) -> QuboForm {
    let mut form = model.objective.clone();
    for con in &model.constraints {
        // (sum v - 1)^2 = -sum v + 2 sum_{a<b} v_a v_b + 1 for binaries
        form.offset += lambda;
        for (k, &a) in con.vars.iter().enumerate() {
            form.add_linear(a, -lambda);
            for &b in &con.vars[k + 1..] {
                form.add_quadratic(a, b, 2.0 * lambda);
            }
        }
    }
    QuboForm {
        form,
        num_vars: model.num_vars(),
        penalty_weight: lambda,
    }
}

/// Reads the one-hot position matrix into a route. Fails on the first
/// violated constraint, in model order.
pub fn decode(model: &RouteModel, assignment: &[bool]) -> Result<Route, ModelError> {
    if assignment.len() != model.num_vars() {
        return Err(ModelError::AssignmentLength {
            expected: model.num_vars(),
            got: assignment.len(),
        });
    }
    for con in &model.constraints {
        if con.vars.iter().filter(|&&v| assignment[v]).count() != 1 {
            return Err(ModelError::InfeasibleAssignment(con.kind));
        }
    }
    let n = model.n();
    let order: Vec<usize> = (1..=n)
        .map(|p| (1..=n).find(|&i| assignment[model.x(i, p)]).expect("checked one-hot"))
        .collect();
    let station = (1..=model.m()).find(|&j| assignment[model.y(j)]);
    Ok(model.route_from_order(&order, station))
}

/// Inverse of [`decode`] for routes that fit the model.
pub fn encode(model: &RouteModel, route: &Route) -> Result<Vec<bool>, ModelError> {
    let n = model.n();
    let seq = &route.sequence;
    if seq.len() != n + 2 || seq[0] != model.depot {
        return Err(ModelError::RouteMismatch(format!(
            "expected depot {} and {} visits, got {:?}",
            model.depot, n, seq
        )));
    }
    let mut bits = vec![false; model.num_vars()];
    for (p, &g) in seq[1..=n].iter().enumerate() {
        match model.local_of(g) {
            Some(i) if i <= n => bits[model.x(i, p + 1)] = true,
            _ => {
                return Err(ModelError::RouteMismatch(format!(
                    "location {g} is not a visiting node of the model"
                )))
            }
        }
    }
    let last = seq[n + 1];
    match model.kind {
        ModelKind::ClosedTour if last == model.depot => {}
        ModelKind::OpenCharging => match model.local_of(last) {
            Some(l) if l > n => bits[model.y(l - n)] = true,
            _ => {
                return Err(ModelError::RouteMismatch(format!(
                    "location {last} is not a charging station of the model"
                )))
            }
        },
        _ => {
            return Err(ModelError::RouteMismatch(format!(
                "closed tour must end at depot {}, got {last}",
                model.depot
            )))
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorConfig, UseCase};

    fn inst(uc: UseCase) -> Instance {
        generate_instance(uc, 12, 21, &GeneratorConfig::default()).unwrap()
    }

    fn sub(inst: &Instance, cluster: Vec<usize>, closed: bool) -> Subproblem {
        Subproblem {
            cluster,
            depot: inst.depot_index(0),
            charging: inst.charging_indices().take(2).collect(),
            closed,
        }
    }

    #[test]
    fn closed_model_counts() {
        let i = inst(UseCase::Uc1);
        let m = build_model(&sub(&i, vec![0, 1, 2], true), &i).unwrap();
        assert_eq!(m.num_vars(), 9);
        assert_eq!(m.m(), 0);
        assert_eq!(m.constraints().len(), 6);
    }

    #[test]
    fn open_model_counts() {
        let i = inst(UseCase::Uc3);
        let m = build_model(&sub(&i, vec![0, 1, 2], false), &i).unwrap();
        assert_eq!(m.num_vars(), 11);
        assert_eq!(m.m(), 2);
        assert_eq!(m.constraints().len(), 7);
        assert_eq!(m.constraints()[6].kind, ConstraintKind::SingleStation);
    }

    #[test]
    fn forbidden_arc_coefficient_is_big_m() {
        let i = inst(UseCase::Uc1);
        let &(a, b) = i.costs().forbidden().iter().next().expect("generator forbids arcs");
        let third = (0..12).find(|&k| k != a && k != b).unwrap();
        let m = build_model(&sub(&i, vec![a, b, third], true), &i).unwrap();
        let la = m.cluster().iter().position(|&g| g == a).unwrap() + 1;
        let lb = m.cluster().iter().position(|&g| g == b).unwrap() + 1;
        for p in 1..m.n() {
            assert_eq!(m.objective().coefficient(m.x(la, p), m.x(lb, p + 1)), i.costs().big_m());
        }
    }

    #[test]
    fn identity_assignment_decodes_in_order() {
        let i = inst(UseCase::Uc3);
        let m = build_model(&sub(&i, vec![3, 5, 8], false), &i).unwrap();
        let mut bits = vec![false; m.num_vars()];
        for k in 1..=3 {
            bits[m.x(k, k)] = true;
        }
        bits[m.y(2)] = true;
        let r = decode(&m, &bits).unwrap();
        assert_eq!(r.sequence, vec![12, 3, 5, 8, 15]);
        assert_eq!(r.end, RouteEnd::Charging(15));
        assert_eq!(r.cost, route_cost(&r, i.costs()));
        assert_eq!(encode(&m, &r).unwrap(), bits);
    }

    #[test]
    fn decode_reports_violations() {
        let i = inst(UseCase::Uc3);
        let m = build_model(&sub(&i, vec![3, 5, 8], false), &i).unwrap();
        let mut bits = vec![false; m.num_vars()];
        bits[m.x(1, 1)] = true;
        bits[m.x(3, 2)] = true;
        bits[m.x(3, 3)] = true;
        bits[m.y(1)] = true;
        assert_eq!(
            decode(&m, &bits),
            Err(ModelError::InfeasibleAssignment(ConstraintKind::NodeOnce(2)))
        );
        bits[m.x(3, 2)] = false;
        bits[m.x(2, 2)] = true;
        bits[m.y(2)] = true;
        assert_eq!(
            decode(&m, &bits),
            Err(ModelError::InfeasibleAssignment(ConstraintKind::SingleStation))
        );
        assert!(matches!(decode(&m, &bits[1..]), Err(ModelError::AssignmentLength { .. })));
    }

    #[test]
    fn route_cost_sums_arcs() {
        let i = inst(UseCase::Uc1);
        let r = Route {
            sequence: vec![12, 1, 2, 12],
            cost: 0.0,
            end: RouteEnd::Depot,
        };
        let c = i.costs();
        let expected = c.cost(12, 1) + c.cost(1, 2) + c.cost(2, 12);
        assert_eq!(route_cost(&r, c), expected);
    }

    #[test]
    fn penalty_zero_on_feasible() {
        let i = inst(UseCase::Uc1);
        let m = build_model(&sub(&i, vec![0, 4, 7], true), &i).unwrap();
        let q = to_qubo(&m);
        let r = m.route_from_order(&[2, 3, 1], None);
        let bits = encode(&m, &r).unwrap();
        assert!((q.energy(&bits) - m.objective().evaluate(&bits)).abs() < 1e-9 * r.cost);
        assert!((q.energy(&bits) - r.cost).abs() < 1e-9 * r.cost);
    }

    #[test]
    fn route_end_text_form() {
        assert_eq!(RouteEnd::Charging(14).to_string(), "charging:14");
        assert_eq!("charging:14".parse::<RouteEnd>(), Ok(RouteEnd::Charging(14)));
        assert_eq!("depot".parse::<RouteEnd>(), Ok(RouteEnd::Depot));
        assert!("charging:x".parse::<RouteEnd>().is_err());
    }

    #[test]
    fn dump_is_stable() {
        let i = inst(UseCase::Uc3);
        let m = build_model(&sub(&i, vec![0, 1], false), &i).unwrap();
        let d = m.dump();
        assert_eq!(d, m.dump());
        assert!(d.starts_with("model open_charging n=2 m=2 depot=12 cluster=[0, 1] stations=[14, 15]\n"));
        assert!(d.contains("  single_station: y[1] + y[2] = 1\n"));
        assert!(d.contains("  node_once(1): x[1][1] + x[1][2] = 1\n"));
    }
}
