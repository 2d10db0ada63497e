//! End-to-end solve: cluster, assign depots, route both clusters, validate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{assign_depots, AssignmentError, Subproblem};
use crate::bits::Bitstring;
use crate::instance::{Instance, UseCase};
use crate::qaoa::{optimize, EvalMode, QaoaConfig, QaoaError, QaoaRun, WeightedGraph};
use crate::route_model::{build_model, route_cost, ModelError, Route, RouteEnd, RouteModel};
use crate::solvers::{mix_seed, solver_registry, SolveError, SolveResult, SolverConfig, SolverKind};

/// Clusters up to this size are routed exactly under [`RoutingPolicy::Auto`].
pub const AUTO_EXACT_MAX: usize = 13;

/// Reseeded clustering attempts after the first one.
pub const QAOA_RETRIES: usize = 3;

/// Relative tolerance for cost re-computation checks.
pub const COST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("clustering failed: {0}")]
    Qaoa(#[from] QaoaError),
    #[error("depot assignment failed: {0}")]
    Assignment(#[from] AssignmentError),
    #[error("model construction failed: {0}")]
    Model(#[from] ModelError),
    #[error("routing failed: {0}")]
    Solve(#[from] SolveError),
    #[error("solution failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("invalid solution file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot access {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// How each cluster's routing solver is picked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingPolicy {
    /// `exact` up to [`AUTO_EXACT_MAX`] nodes, `portfolio` above.
    Auto,
    /// A solver registry name.
    Named(String),
}

impl RoutingPolicy {
    pub fn solver_for(&self, cluster_size: usize) -> &str {
        match self {
            RoutingPolicy::Auto if cluster_size <= AUTO_EXACT_MAX => SolverKind::Exact.name(),
            RoutingPolicy::Auto => SolverKind::Portfolio.name(),
            RoutingPolicy::Named(name) => name,
        }
    }
}

impl fmt::Display for RoutingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoutingPolicy::Auto => f.write_str("auto"),
            RoutingPolicy::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub qaoa: QaoaConfig,
    pub solver: SolverConfig,
    pub policy: RoutingPolicy,
    /// Copy phase timings into the solution; off keeps the JSON reproducible.
    pub record_timings: bool,
    /// Recorded in the solution so later commands can find the instance.
    pub instance_path: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            qaoa: QaoaConfig::default(),
            solver: SolverConfig::default(),
            policy: RoutingPolicy::Auto,
            record_timings: false,
            instance_path: None,
        }
    }
}

impl PipelineConfig {
    /// Uses `seed` for both clustering and routing.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.qaoa.seed = seed;
        self.solver.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub path: Option<String>,
    pub name: String,
    pub seed: u64,
    pub use_case: UseCase,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub cut_weight: f64,
    pub assignment: Bitstring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaReport {
    pub depth: usize,
    pub max_iter: usize,
    pub optimizer: String,
    pub eval_mode: EvalMode,
    /// Seed of the attempt that produced the partition.
    pub seed: u64,
    pub attempts: usize,
    pub evaluations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub probability: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub solver: String,
    pub depot: usize,
    pub cluster_size: usize,
    pub energy: f64,
    pub thread: Option<usize>,
    pub restart: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub policy: String,
    pub config: SolverConfig,
    pub qaoa: QaoaReport,
    pub routes: Vec<RouteReport>,
}

/// Combined result of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub instance: InstanceRef,
    pub partition: PartitionReport,
    pub routes: Vec<Route>,
    pub total_cost: f64,
    pub timings_ms: BTreeMap<String, f64>,
    pub solver: SolverReport,
}

impl Solution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Everything a pipeline run produced, beyond the [`Solution`] itself.
#[derive(Debug)]
pub struct PipelineRun {
    pub solution: Solution,
    pub qaoa: QaoaRun,
    pub subproblems: [Subproblem; 2],
    pub models: [RouteModel; 2],
    pub results: [SolveResult; 2],
    /// Phase wall times in milliseconds, always measured.
    pub timings_ms: BTreeMap<String, f64>,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Clusters with retries: the configured seed first, then up to
/// [`QAOA_RETRIES`] derived seeds while every outcome is trivial.
fn cluster(g: &WeightedGraph, cfg: &QaoaConfig) -> Result<(QaoaRun, u64, usize), QaoaError> {
    let mut seed = cfg.seed;
    for attempt in 1..=QAOA_RETRIES + 1 {
        let run_cfg = QaoaConfig { seed, ..cfg.clone() };
        match optimize(g, &run_cfg) {
            Ok(run) => return Ok((run, seed, attempt)),
            Err(QaoaError::AllTrivialPartitions | QaoaError::TrivialPartition) => {
                log::warn!("clustering attempt {attempt} with seed {seed} gave a trivial partition");
                seed = mix_seed(seed.wrapping_add(attempt as u64));
            }
            Err(e) => return Err(e),
        }
    }
    Err(QaoaError::AllTrivialPartitions)
}

fn route_one(model: &RouteModel, cfg: &PipelineConfig) -> Result<SolveResult, PipelineError> {
    let name = cfg.policy.solver_for(model.n());
    let solver = solver_registry()
        .get(name)
        .ok_or_else(|| SolveError::UnknownSolver(name.to_string()))?;
    Ok(solver.solve(model, &cfg.solver)?)
}

/// Runs the pipeline and validates the result.
pub fn solve_pipeline(inst: &Instance, cfg: &PipelineConfig) -> Result<Solution, PipelineError> {
    run_pipeline(inst, cfg).map(|r| r.solution)
}

/// [`solve_pipeline`] with intermediate products kept.
pub fn run_pipeline(inst: &Instance, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let started = Instant::now();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let graph = WeightedGraph::from_instance(inst);
    let (qrun, qseed, attempts) = cluster(&graph, &cfg.qaoa)?;
    timings.insert("clustering".to_string(), ms(t));

    let t = Instant::now();
    let (sub_a, sub_b) = assign_depots(&qrun.partition, inst)?;
    let model_a = build_model(&sub_a, inst)?;
    let model_b = build_model(&sub_b, inst)?;
    timings.insert("assignment".to_string(), ms(t));

    let t = Instant::now();
    let (res_a, res_b) = thread::scope(|s| {
        let a = s.spawn(|| route_one(&model_a, cfg));
        let b = route_one(&model_b, cfg);
        (a.join().expect("routing thread panicked"), b)
    });
    let (res_a, res_b) = (res_a?, res_b?);
    timings.insert("routing".to_string(), ms(t));
    timings.insert("total".to_string(), ms(started));

    let report = |sub: &Subproblem, r: &SolveResult| RouteReport {
        solver: r.solver.clone(),
        depot: sub.depot,
        cluster_size: sub.cluster.len(),
        energy: r.energy,
        thread: r.thread_id,
        restart: r.restart_id,
    };
    let solution = Solution {
        instance: InstanceRef {
            path: cfg.instance_path.clone(),
            name: inst.name(),
            seed: inst.seed(),
            use_case: inst.use_case(),
            n: inst.n(),
        },
        partition: PartitionReport {
            a: qrun.partition.cluster_a.clone(),
            b: qrun.partition.cluster_b.clone(),
            cut_weight: qrun.partition.cut_weight,
            assignment: qrun.partition.assignment.clone(),
        },
        routes: vec![res_a.route.clone(), res_b.route.clone()],
        total_cost: res_a.route.cost + res_b.route.cost,
        timings_ms: if cfg.record_timings {
            timings.clone()
        } else {
            BTreeMap::new()
        },
        solver: SolverReport {
            policy: cfg.policy.to_string(),
            config: cfg.solver.clone(),
            qaoa: QaoaReport {
                depth: cfg.qaoa.depth,
                max_iter: cfg.qaoa.max_iter,
                optimizer: cfg.qaoa.optimizer.clone(),
                eval_mode: cfg.qaoa.eval_mode,
                seed: qseed,
                attempts,
                evaluations: qrun.evaluations,
                initial_energy: qrun.initial_energy,
                final_energy: qrun.final_energy,
                probability: qrun.probability,
                gammas: qrun.params.gammas.clone(),
                betas: qrun.params.betas.clone(),
            },
            routes: vec![report(&sub_a, &res_a), report(&sub_b, &res_b)],
        },
    };
    let violations = verify_solution(&solution, inst);
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    Ok(PipelineRun {
        solution,
        qaoa: qrun,
        subproblems: [sub_a, sub_b],
        models: [model_a, model_b],
        results: [res_a, res_b],
        timings_ms: timings,
    })
}

/// A broken solution invariant. `route` fields are 0-based route positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    RouteCount(usize),
    InstanceMismatch(String),
    DuplicateVisit(usize),
    MissingVisit(usize),
    /// A location that is not a visiting node appears mid-route.
    StrayLocation { route: usize, location: usize },
    BadStart { route: usize, location: Option<usize> },
    BadEndpoint(usize),
    /// Routes start at the wrong depots for the use case.
    DepotRule(String),
    ForbiddenArc { route: usize, from: usize, to: usize },
    CostMismatch { route: usize, stated: f64, actual: f64 },
    TotalCostMismatch { stated: f64, actual: f64 },
    PartitionMismatch(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RouteCount(k) => write!(f, "expected 2 routes, found {k}"),
            Violation::InstanceMismatch(m) => write!(f, "instance mismatch: {m}"),
            Violation::DuplicateVisit(i) => write!(f, "node {i} visited more than once"),
            Violation::MissingVisit(i) => write!(f, "node {i} never visited"),
            Violation::StrayLocation { route, location } => {
                write!(f, "route {route} passes through non-visiting location {location}")
            }
            Violation::BadStart { route, location } => match location {
                Some(l) => write!(f, "route {route} starts at {l}, not a depot"),
                None => write!(f, "route {route} is empty"),
            },
            Violation::BadEndpoint(r) => write!(f, "route {r} ends at an invalid location"),
            Violation::DepotRule(m) => write!(f, "depot rule: {m}"),
            Violation::ForbiddenArc { route, from, to } => {
                write!(f, "route {route} uses forbidden arc {from}->{to}")
            }
            Violation::CostMismatch { route, stated, actual } => {
                write!(f, "route {route} states cost {stated}, arcs sum to {actual}")
            }
            Violation::TotalCostMismatch { stated, actual } => {
                write!(f, "total cost {stated} differs from route sum {actual}")
            }
            Violation::PartitionMismatch(r) => {
                write!(f, "route {r} does not visit exactly its cluster")
            }
        }
    }
}

fn costs_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Checks coverage, endpoints, depot rules, forbidden arcs and costs;
/// an empty list means the solution is valid.
pub fn verify_solution(sol: &Solution, inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n();
    let uc = inst.use_case();
    if sol.instance.use_case != uc || sol.instance.n != n {
        out.push(Violation::InstanceMismatch(format!(
            "solution is for {} with n={}, instance is {} with n={}",
            sol.instance.use_case, sol.instance.n, uc, n
        )));
        return out;
    }
    if sol.routes.len() != 2 {
        out.push(Violation::RouteCount(sol.routes.len()));
    }
    let size = inst.location_count();
    let is_depot = |l: usize| inst.depot_indices().contains(&l);
    let is_station = |l: usize| inst.charging_indices().contains(&l);

    let mut seen = vec![0usize; n];
    for (r, route) in sol.routes.iter().enumerate() {
        let seq = &route.sequence;
        match seq.first() {
            None => {
                out.push(Violation::BadStart { route: r, location: None });
                continue;
            }
            Some(&s) if !is_depot(s) => out.push(Violation::BadStart {
                route: r,
                location: Some(s),
            }),
            _ => {}
        }
        if seq.iter().any(|&l| l >= size) || seq.len() < 2 {
            out.push(Violation::BadEndpoint(r));
            continue;
        }
        let last = seq[seq.len() - 1];
        let end_ok = if uc.closed_routes() {
            last == seq[0] && route.end == RouteEnd::Depot
        } else {
            is_station(last) && route.end == RouteEnd::Charging(last)
        };
        if !end_ok {
            out.push(Violation::BadEndpoint(r));
        }
        for &l in route.visiting() {
            if l < n {
                seen[l] += 1;
            } else {
                out.push(Violation::StrayLocation { route: r, location: l });
            }
        }
        for (a, b) in route.arcs() {
            if inst.costs().is_forbidden(a, b) {
                out.push(Violation::ForbiddenArc { route: r, from: a, to: b });
            }
        }
        let actual = route_cost(route, inst.costs());
        if !costs_match(route.cost, actual) {
            out.push(Violation::CostMismatch {
                route: r,
                stated: route.cost,
                actual,
            });
        }
    }
    for (i, &k) in seen.iter().enumerate() {
        match k {
            0 => out.push(Violation::MissingVisit(i)),
            1 => {}
            _ => out.push(Violation::DuplicateVisit(i)),
        }
    }

    let starts: Vec<usize> = sol.routes.iter().filter_map(|r| r.sequence.first().copied()).collect();
    if starts.len() == 2 {
        match uc {
            UseCase::Uc1 if starts[0] != starts[1] => {
                out.push(Violation::DepotRule("both routes must share the single depot".into()))
            }
            UseCase::Uc2 | UseCase::Uc3 if starts[0] == starts[1] => {
                out.push(Violation::DepotRule("each route needs its own depot".into()))
            }
            _ => {}
        }
    }

    let clusters = [&sol.partition.a, &sol.partition.b];
    for (r, route) in sol.routes.iter().enumerate().take(2) {
        let visited: BTreeSet<usize> = route.visiting().iter().copied().collect();
        let cluster: BTreeSet<usize> = clusters[r].iter().copied().collect();
        if visited != cluster {
            out.push(Violation::PartitionMismatch(r));
        }
    }

    let sum: f64 = sol.routes.iter().map(|r| r.cost).sum();
    if !costs_match(sol.total_cost, sum) {
        out.push(Violation::TotalCostMismatch {
            stated: sol.total_cost,
            actual: sum,
        });
    }
    out
}
