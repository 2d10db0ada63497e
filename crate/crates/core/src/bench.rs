//! Benchmark matrix: every use case at every size, each cell compared with
//! exact oracles for clustering and routing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::instance::{generate_instance, GeneratorConfig, Instance, UseCase};
use crate::pipeline::{run_pipeline, verify_solution, PipelineConfig, RoutingPolicy, Solution, Violation};
use crate::qaoa::{brute_force_maxcut, WeightedGraph};
use crate::route_model::{ModelKind, RouteModel};
use crate::solvers::{brute_force, held_karp, path_dp, SolveError, SolveResult, BRUTE_FORCE_MAX_N};
use crate::statevector::MAX_QUBITS;

pub const BENCH_SIZES: [usize; 3] = [12, 16, 22];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub use_cases: Vec<UseCase>,
    pub sizes: Vec<usize>,
    /// Seed for instance generation, clustering and routing alike.
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub generator: GeneratorConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            use_cases: UseCase::ALL.to_vec(),
            sizes: BENCH_SIZES.to_vec(),
            seed: 0,
            pipeline: PipelineConfig {
                policy: RoutingPolicy::Named("portfolio".into()),
                ..PipelineConfig::default()
            },
            generator: GeneratorConfig::default(),
        }
    }
}

/// Routing result of one cluster against its exact reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteCheck {
    pub solver: String,
    pub cluster_size: usize,
    pub cost: f64,
    pub oracle: Option<&'static str>,
    pub oracle_cost: Option<f64>,
}

impl RouteCheck {
    /// Cost above the oracle optimum, if an oracle ran.
    pub fn gap(&self) -> Option<f64> {
        self.oracle_cost.map(|o| self.cost - o)
    }

    /// Whether the route matches the oracle to relative precision 1e-9.
    pub fn is_optimal(&self) -> Option<bool> {
        self.oracle_cost
            .map(|o| (self.cost - o).abs() <= 1e-9 * o.abs().max(1.0))
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub solution: Solution,
    pub max_cut: Option<f64>,
    pub routes: Vec<RouteCheck>,
    pub violations: Vec<Violation>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl CellResult {
    pub fn cut_ratio(&self) -> Option<f64> {
        self.max_cut
            .filter(|&m| m > 0.0)
            .map(|m| self.solution.partition.cut_weight / m)
    }
}

#[derive(Debug, Clone)]
pub struct BenchCell {
    pub use_case: UseCase,
    pub n: usize,
    pub instance: Option<Instance>,
    pub outcome: Result<CellResult, String>,
}

impl BenchCell {
    pub fn name(&self) -> String {
        self.use_case.instance_name(self.n)
    }
}

/// Exact reference for a routing model, when one is tractable.
pub fn oracle(model: &RouteModel) -> Option<(&'static str, Result<SolveResult, SolveError>)> {
    match model.kind() {
        ModelKind::ClosedTour => Some(("held-karp", held_karp(model))),
        ModelKind::OpenCharging if model.n() <= BRUTE_FORCE_MAX_N => Some(("brute-force", brute_force(model))),
        ModelKind::OpenCharging => Some(("path-dp", path_dp(model))),
    }
    .filter(|(_, r)| !matches!(r, Err(SolveError::SizeGuard { .. })))
}

/// Generates and solves one cell; failures are recorded, not raised.
pub fn run_cell(use_case: UseCase, n: usize, cfg: &BenchConfig) -> BenchCell {
    let inst = match generate_instance(use_case, n, cfg.seed, &cfg.generator) {
        Ok(i) => i,
        Err(e) => {
            return BenchCell {
                use_case,
                n,
                instance: None,
                outcome: Err(e.to_string()),
            }
        }
    };
    let pcfg = PipelineConfig {
        instance_path: Some(format!("{}.json", inst.name())),
        ..cfg.pipeline.clone()
    }
    .with_seed(cfg.seed);
    let outcome = evaluate(&inst, &pcfg);
    BenchCell {
        use_case,
        n,
        instance: Some(inst),
        outcome,
    }
}

fn evaluate(inst: &Instance, pcfg: &PipelineConfig) -> Result<CellResult, String> {
    let run = run_pipeline(inst, pcfg).map_err(|e| e.to_string())?;
    let mut timings = run.timings_ms.clone();

    let t = Instant::now();
    let graph = WeightedGraph::from_instance(inst);
    let max_cut = if graph.n() <= MAX_QUBITS {
        brute_force_maxcut(&graph).ok().map(|(_, w)| w)
    } else {
        None
    };
    let routes = run
        .models
        .iter()
        .zip(&run.results)
        .map(|(model, res)| {
            let reference = oracle(model);
            RouteCheck {
                solver: res.solver.clone(),
                cluster_size: model.n(),
                cost: res.route.cost,
                oracle: reference.as_ref().map(|r| r.0),
                oracle_cost: reference.and_then(|(_, r)| r.ok()).map(|r| r.route.cost),
            }
        })
        .collect();
    timings.insert("oracles".to_string(), t.elapsed().as_secs_f64() * 1e3);
    Ok(CellResult {
        violations: verify_solution(&run.solution, inst),
        solution: run.solution,
        max_cut,
        routes,
        timings_ms: timings,
    })
}

/// Runs every cell, in parallel across cells; output order is fixed.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchCell> {
    let cells: Vec<(UseCase, usize)> = cfg
        .use_cases
        .iter()
        .flat_map(|&uc| cfg.sizes.iter().map(move |&n| (uc, n)))
        .collect();
    cells
        .par_iter()
        .map(|&(uc, n)| run_cell(uc, n, cfg))
        .collect()
}

#[derive(Debug, Serialize)]
struct CsvRow {
    instance: String,
    use_case: String,
    n: usize,
    status: &'static str,
    cluster_a: Option<usize>,
    cluster_b: Option<usize>,
    cut_weight: Option<f64>,
    max_cut: Option<f64>,
    cut_ratio: Option<f64>,
    route_a_solver: Option<String>,
    route_a_cost: Option<f64>,
    route_a_oracle: Option<&'static str>,
    route_a_gap: Option<f64>,
    route_b_solver: Option<String>,
    route_b_cost: Option<f64>,
    route_b_oracle: Option<&'static str>,
    route_b_gap: Option<f64>,
    total_cost: Option<f64>,
    violations: Option<usize>,
    clustering_ms: Option<f64>,
    routing_ms: Option<f64>,
    total_ms: Option<f64>,
    error: Option<String>,
}

fn csv_row(cell: &BenchCell) -> CsvRow {
    let mut row = CsvRow {
        instance: cell.name(),
        use_case: cell.use_case.to_string(),
        n: cell.n,
        status: "error",
        cluster_a: None,
        cluster_b: None,
        cut_weight: None,
        max_cut: None,
        cut_ratio: None,
        route_a_solver: None,
        route_a_cost: None,
        route_a_oracle: None,
        route_a_gap: None,
        route_b_solver: None,
        route_b_cost: None,
        route_b_oracle: None,
        route_b_gap: None,
        total_cost: None,
        violations: None,
        clustering_ms: None,
        routing_ms: None,
        total_ms: None,
        error: None,
    };
    match &cell.outcome {
        Err(e) => row.error = Some(e.clone()),
        Ok(res) => {
            let sol = &res.solution;
            row.status = if res.violations.is_empty() { "ok" } else { "invalid" };
            row.cluster_a = Some(sol.partition.a.len());
            row.cluster_b = Some(sol.partition.b.len());
            row.cut_weight = Some(sol.partition.cut_weight);
            row.max_cut = res.max_cut;
            row.cut_ratio = res.cut_ratio();
            let [a, b] = [&res.routes[0], &res.routes[1]];
            row.route_a_solver = Some(a.solver.clone());
            row.route_a_cost = Some(a.cost);
            row.route_a_oracle = a.oracle;
            row.route_a_gap = a.gap();
            row.route_b_solver = Some(b.solver.clone());
            row.route_b_cost = Some(b.cost);
            row.route_b_oracle = b.oracle;
            row.route_b_gap = b.gap();
            row.total_cost = Some(sol.total_cost);
            row.violations = Some(res.violations.len());
            row.clustering_ms = res.timings_ms.get("clustering").copied();
            row.routing_ms = res.timings_ms.get("routing").copied();
            row.total_ms = res.timings_ms.get("total").copied();
        }
    }
    row
}

/// Machine-readable report, one row per cell.
pub fn bench_csv(cells: &[BenchCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for cell in cells {
        w.serialize(csv_row(cell)).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Human-readable summary table.
pub fn bench_table(cells: &[BenchCell]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>7} {:>9} {:>12} {:>10} {:>10} {:>12} {:>5} {:>9}",
        "instance", "split", "cut ratio", "total cost", "gap a", "gap b", "oracles", "viol", "time s"
    );
    for cell in cells {
        match &cell.outcome {
            Err(e) => {
                let _ = writeln!(out, "{:<8} error: {e}", cell.name());
            }
            Ok(res) => {
                let sol = &res.solution;
                let oracles: Vec<&str> = res.routes.iter().map(|r| r.oracle.unwrap_or("-")).collect();
                let _ = writeln!(
                    out,
                    "{:<8} {:>7} {:>9} {:>12.1} {:>10} {:>10} {:>12} {:>5} {:>9}",
                    cell.name(),
                    format!("{}/{}", sol.partition.a.len(), sol.partition.b.len()),
                    opt(res.cut_ratio(), 4),
                    sol.total_cost,
                    opt(res.routes[0].gap(), 3),
                    opt(res.routes[1].gap(), 3),
                    oracles.join(","),
                    res.violations.len(),
                    opt(res.timings_ms.get("total").map(|t| t / 1e3), 2),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrix_csv_shape() {
        let mut cfg = BenchConfig {
            sizes: vec![6],
            seed: 1,
            ..BenchConfig::default()
        };
        cfg.pipeline.qaoa.max_iter = 10;
        cfg.pipeline.solver.sweeps = 500;
        cfg.pipeline.solver.restarts = 2;
        let cells = run_bench(&cfg);
        assert_eq!(cells.len(), 3);
        let csv = bench_csv(&cells);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("instance,use_case,n,status"));
        for cell in &cells {
            let res = cell.outcome.as_ref().unwrap();
            assert!(res.violations.is_empty());
            assert!(res.routes.iter().all(|r| r.oracle.is_some()));
        }
        assert!(bench_table(&cells).contains("UC3_6"));
    }
}
