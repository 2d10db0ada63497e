//! Depth-p QAOA for weighted MaxCut over the visiting-node distance graph.
//!
//! The cost layer for edge `(u, v, w)` is `CX(u,v) RZ(2 gamma w, v) CX(u,v)`,
//! i.e. `exp(-i gamma w Z_u Z_v)`; the mixer is `RX(2 beta)` on every qubit.
//! [`build_ansatz`] applies those gates literally. [`optimize`] uses an
//! equivalent diagonal-phase evaluator that is checked against it in tests.

pub mod optimizer;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bitstring;
use crate::instance::{geo_distance, CostMatrix, GeoPoint, Instance};
use crate::statevector::{histogram, StateError, StateVector, MAX_QUBITS, PRUNE_THRESHOLD};

pub use optimizer::{optimizer_registry, Cobyla, NelderMead, OptimResult, OptimizerRegistry, ParamOptimizer};

#[derive(Debug, Error, PartialEq)]
pub enum QaoaError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("max_iter must be at least 1")]
    ZeroIterations,
    #[error("graph with {0} nodes exceeds the {MAX_QUBITS}-qubit limit")]
    TooLarge(usize),
    #[error("graph needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
    #[error("assignment has {got} bits, graph has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measurement probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("parameter vectors must both have length {depth}")]
    ParamLength { depth: usize },
    #[error("every outcome in the final distribution is a trivial partition")]
    AllTrivialPartitions,
    #[error("assignment puts every node in the same cluster")]
    TrivialPartition,
    #[error("unknown optimizer `{0}`")]
    UnknownOptimizer(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Undirected graph with positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Edges are stored with `u < v`; duplicate pairs are rejected.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, QaoaError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            let (u, v) = (a.min(b), a.max(b));
            if u == v || v >= n {
                return Err(QaoaError::InvalidEdge(format!("({a},{b}) in a {n}-node graph")));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(QaoaError::InvalidEdge(format!("({a},{b}) has weight {w}")));
            }
            if !seen.insert((u, v)) {
                return Err(QaoaError::InvalidEdge(format!("({u},{v}) given twice")));
            }
            out.push((u, v, w));
        }
        Ok(Self { n, edges: out })
    }

    /// Graph over `nodes` (relabelled `0..nodes.len()`) with weights
    /// `(c(u,v) + c(v,u)) / 2`. When one direction is forbidden the other is
    /// used; pairs forbidden both ways are dropped.
    pub fn from_costs(costs: &CostMatrix, nodes: &[usize]) -> Self {
        let mut edges = Vec::new();
        for (a, &u) in nodes.iter().enumerate() {
            for (b, &v) in nodes.iter().enumerate().skip(a + 1) {
                let fwd = (!costs.is_forbidden(u, v)).then(|| costs.raw(u, v));
                let bwd = (!costs.is_forbidden(v, u)).then(|| costs.raw(v, u));
                let w = match (fwd, bwd) {
                    (Some(x), Some(y)) => (x + y) / 2.0,
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => continue,
                };
                if w > 0.0 {
                    edges.push((a, b, w));
                }
            }
        }
        Self { n: nodes.len(), edges }
    }

    /// Complete graph over the visiting nodes of `inst`.
    pub fn from_instance(inst: &Instance) -> Self {
        let nodes: Vec<usize> = (0..inst.n()).collect();
        Self::from_costs(inst.costs(), &nodes)
    }

    /// Complete graph with haversine weights.
    pub fn from_points(points: &[GeoPoint]) -> Self {
        let mut edges = Vec::new();
        for u in 0..points.len() {
            for v in u + 1..points.len() {
                let w = geo_distance(points[u], points[v]);
                if w > 0.0 {
                    edges.push((u, v, w));
                }
            }
        }
        Self { n: points.len(), edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v, w)| (u, v, w * factor)).collect(),
        }
    }

    /// Cut weight of the partition encoded by basis index `z`.
    pub fn cut_of_index(&self, z: usize) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| ((z >> u) ^ (z >> v)) & 1 == 1)
            .map(|e| e.2)
            .sum()
    }

    /// Cut weight of every basis index, built by doubling: for `z < 2^k`,
    /// `cut(z + 2^k) = cut(z) + sum_v w_kv (1 - 2 z_v)`.
    pub fn cut_table(&self) -> Result<Vec<f64>, QaoaError> {
        if self.n > MAX_QUBITS {
            return Err(QaoaError::TooLarge(self.n));
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let mut table = vec![0.0; 1usize << self.n];
        for k in 0..self.n {
            let half = 1usize << k;
            let (lo, hi) = table.split_at_mut(half);
            for (z, out) in hi[..half].iter_mut().enumerate() {
                let gain: f64 = adj[k]
                    .iter()
                    .map(|&(v, w)| if (z >> v) & 1 == 1 { -w } else { w })
                    .sum();
                *out = lo[z] + gain;
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Expectation straight from the amplitudes.
    Exact,
    /// Expectation over a finite number of simulated shots.
    Sampled { shots: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaConfig {
    pub depth: usize,
    /// Objective evaluations granted to the classical optimizer.
    pub max_iter: usize,
    pub seed: u64,
    pub eval_mode: EvalMode,
    pub optimizer: String,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            max_iter: 50,
            seed: 0,
            eval_mode: EvalMode::Exact,
            optimizer: "cobyla".into(),
        }
    }
}

impl QaoaConfig {
    pub fn validate(&self) -> Result<(), QaoaError> {
        if self.depth == 0 {
            return Err(QaoaError::ZeroDepth);
        }
        if self.max_iter == 0 {
            return Err(QaoaError::ZeroIterations);
        }
        if let EvalMode::Sampled { shots: 0 } = self.eval_mode {
            return Err(QaoaError::State(StateError::NoShots));
        }
        Ok(())
    }
}

/// Layer angles: `gammas` in `[0, 2 pi]`, `betas` in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, QaoaError> {
        if gammas.is_empty() {
            return Err(QaoaError::ZeroDepth);
        }
        if gammas.len() != betas.len() {
            return Err(QaoaError::ParamLength { depth: gammas.len() });
        }
        Ok(Self { gammas, betas })
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    fn from_flat(x: &[f64]) -> Self {
        let p = x.len() / 2;
        Self {
            gammas: x[..p].to_vec(),
            betas: x[p..].to_vec(),
        }
    }

    fn bounds(depth: usize) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, 2.0 * PI); depth];
        b.extend(std::iter::repeat_n((0.0, PI), depth));
        b
    }
}

/// A bipartition of the graph nodes; bit `i` set puts node `i` in cluster b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Bitstring,
    pub cluster_a: Vec<usize>,
    pub cluster_b: Vec<usize>,
    pub cut_weight: f64,
}

impl Partition {
    pub fn from_assignment(assignment: Bitstring, g: &WeightedGraph) -> Result<Self, QaoaError> {
        if assignment.len() != g.n() {
            return Err(QaoaError::LengthMismatch {
                expected: g.n(),
                got: assignment.len(),
            });
        }
        if assignment.is_uniform() {
            return Err(QaoaError::TrivialPartition);
        }
        let cut_weight = -maxcut_obj(&assignment, g)?;
        let (cluster_b, cluster_a): (Vec<usize>, Vec<usize>) =
            (0..g.n()).partition(|&i| assignment.get(i));
        Ok(Self {
            assignment,
            cluster_a,
            cluster_b,
            cut_weight,
        })
    }
}

/// Negated cut weight of `x`; lower is better.
pub fn maxcut_obj(x: &Bitstring, g: &WeightedGraph) -> Result<f64, QaoaError> {
    if x.len() != g.n() {
        return Err(QaoaError::LengthMismatch {
            expected: g.n(),
            got: x.len(),
        });
    }
    let mut cut = 0.0;
    for &(u, v, w) in g.edges() {
        if x.get(u) != x.get(v) {
            cut -= w;
        }
    }
    Ok(cut)
}

/// Expectation of [`maxcut_obj`] under a measurement distribution.
pub fn maxcut_cost(meas: &BTreeMap<Bitstring, f64>, g: &WeightedGraph) -> Result<f64, QaoaError> {
    let total: f64 = meas.values().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(QaoaError::NotNormalized(total));
    }
    let mut energy = 0.0;
    for (x, &p) in meas {
        energy += maxcut_obj(x, g)? * p;
    }
    Ok(energy)
}

fn check_graph(g: &WeightedGraph) -> Result<(), QaoaError> {
    if g.n() > MAX_QUBITS {
        return Err(QaoaError::TooLarge(g.n()));
    }
    if g.n() < 2 {
        return Err(QaoaError::TooSmall(g.n()));
    }
    Ok(())
}

/// Prepares the layered QAOA state gate by gate.
pub fn build_ansatz(g: &WeightedGraph, params: &QaoaParams) -> Result<StateVector, QaoaError> {
    check_graph(g)?;
    if params.gammas.len() != params.betas.len() || params.gammas.is_empty() {
        return Err(QaoaError::ParamLength {
            depth: params.gammas.len(),
        });
    }
    let mut s = StateVector::init_uniform(g.n())?;
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        for &(u, v, w) in g.edges() {
            s.apply_cx(u, v)?;
            s.apply_rz(v, 2.0 * gamma * w)?;
            s.apply_cx(u, v)?;
        }
        for q in 0..g.n() {
            s.apply_rx(q, 2.0 * beta)?;
        }
    }
    Ok(s)
}

/// Fast ansatz evaluation from a precomputed cost diagonal.
///
/// `sum_e w_e Z_u Z_v` is `W - 2 cut(z)` on basis state `z`, so one cost layer
/// is a single diagonal phase.
pub struct AnsatzEvaluator {
    n: usize,
    cut: Vec<f64>,
    zz: Vec<f64>,
}

impl AnsatzEvaluator {
    pub fn new(g: &WeightedGraph) -> Result<Self, QaoaError> {
        check_graph(g)?;
        let cut = g.cut_table()?;
        let total = g.total_weight();
        let zz = cut.iter().map(|c| total - 2.0 * c).collect();
        Ok(Self { n: g.n(), cut, zz })
    }

    pub fn state(&self, params: &QaoaParams) -> Result<StateVector, QaoaError> {
        let mut s = StateVector::init_uniform(self.n)?;
        for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
            s.apply_diagonal_phase(&self.zz, gamma)?;
            s.apply_rx_all(2.0 * beta)?;
        }
        Ok(s)
    }

    /// Exact `<-cut>` of a state.
    pub fn energy_of(&self, s: &StateVector) -> f64 {
        -s.expectation_diagonal(&self.cut)
    }

    pub fn cut_values(&self) -> &[f64] {
        &self.cut
    }
}

/// Result of a QAOA optimization. Energies are in the graph's own units.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaRun {
    pub params: QaoaParams,
    pub partition: Partition,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub evaluations: usize,
    /// Partition probability mass of the returned assignment.
    pub probability: f64,
}

/// Optimizes the QAOA angles and extracts the clustering bipartition.
///
/// Edge weights are normalized to a maximum of 1 for the circuit. The
/// returned partition is the most probable non-trivial outcome of the best
/// parameters, where an outcome and its complement count as one partition.
pub fn optimize(g: &WeightedGraph, cfg: &QaoaConfig) -> Result<QaoaRun, QaoaError> {
    optimize_with(g, cfg, &optimizer_registry())
}

pub fn optimize_with(
    g: &WeightedGraph,
    cfg: &QaoaConfig,
    optimizers: &OptimizerRegistry,
) -> Result<QaoaRun, QaoaError> {
    cfg.validate()?;
    check_graph(g)?;
    let opt = optimizers
        .get(&cfg.optimizer)
        .ok_or_else(|| QaoaError::UnknownOptimizer(cfg.optimizer.clone()))?;
    let max_w = g.max_weight();
    let scale = if max_w > 0.0 { max_w } else { 1.0 };
    let norm = g.scaled(1.0 / scale);
    let eval = AnsatzEvaluator::new(&norm)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x0: Vec<f64> = (0..cfg.depth).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    x0.extend((0..cfg.depth).map(|_| rng.random::<f64>() * PI));
    let shot_seed = rng.random::<u64>();

    let mut state_error = None;
    let mut calls = 0u64;
    let mut objective = |x: &[f64]| -> f64 {
        calls += 1;
        let params = QaoaParams::from_flat(x);
        let result = eval.state(&params).and_then(|s| match cfg.eval_mode {
            EvalMode::Exact => Ok(eval.energy_of(&s)),
            EvalMode::Sampled { shots } => {
                let draws = s.sample(shots, shot_seed.wrapping_add(calls))?;
                Ok(sampled_energy(&draws, &eval))
            }
        });
        match result {
            Ok(e) => e,
            Err(e) => {
                state_error.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let res = opt.minimize(&mut objective, &x0, &QaoaParams::bounds(cfg.depth), cfg.max_iter);
    if let Some(e) = state_error {
        return Err(e);
    }

    let params = QaoaParams::from_flat(&res.x);
    let state = eval.state(&params)?;
    let probs: Vec<f64> = match cfg.eval_mode {
        EvalMode::Exact => state.probability_vector(),
        EvalMode::Sampled { shots } => {
            let draws = state.sample(shots, shot_seed.wrapping_sub(1))?;
            let mut p = vec![0.0; 1usize << g.n()];
            for (b, c) in histogram(&draws) {
                p[b.to_index()] = c as f64 / shots as f64;
            }
            p
        }
    };
    let (index, probability) = most_probable_partition(&probs).ok_or(QaoaError::AllTrivialPartitions)?;
    let partition = Partition::from_assignment(Bitstring::from_index(g.n(), index), g)?;
    if partition.cluster_a.len().abs_diff(partition.cluster_b.len()) > g.n() / 2 {
        log::info!(
            "unbalanced partition {}/{}",
            partition.cluster_a.len(),
            partition.cluster_b.len()
        );
    }
    Ok(QaoaRun {
        params,
        partition,
        initial_energy: res.history[0] * scale,
        final_energy: res.value * scale,
        evaluations: res.evaluations,
        probability,
    })
}

fn sampled_energy(draws: &[Bitstring], eval: &AnsatzEvaluator) -> f64 {
    let total: f64 = draws.iter().map(|b| eval.cut[b.to_index()]).sum();
    -total / draws.len() as f64
}

/// Index (with node 0 in cluster a) maximizing `p(z) + p(!z)` over
/// non-trivial partitions; ties go to the smaller index.
fn most_probable_partition(probs: &[f64]) -> Option<(usize, f64)> {
    let full = probs.len() - 1;
    let mut best: Option<(usize, f64)> = None;
    for z in (2..probs.len()).step_by(2) {
        let mass = probs[z] + probs[full ^ z];
        if mass >= PRUNE_THRESHOLD && best.is_none_or(|(_, m)| mass > m) {
            best = Some((z, mass));
        }
    }
    best
}

/// Runs [`optimize`] once per seed and keeps the largest cut; ties keep the
/// earlier seed. Fails only if every seed fails.
pub fn optimize_best_of(g: &WeightedGraph, cfg: &QaoaConfig, seeds: &[u64]) -> Result<QaoaRun, QaoaError> {
    let mut best: Option<QaoaRun> = None;
    let mut last_err = QaoaError::AllTrivialPartitions;
    for &seed in seeds {
        let run_cfg = QaoaConfig { seed, ..cfg.clone() };
        match optimize(g, &run_cfg) {
            Ok(run) => {
                if best
                    .as_ref()
                    .is_none_or(|b| run.partition.cut_weight > b.partition.cut_weight)
                {
                    best = Some(run);
                }
            }
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// Exhaustive maximum cut with node 0 fixed in cluster a.
pub fn brute_force_maxcut(g: &WeightedGraph) -> Result<(Bitstring, f64), QaoaError> {
    check_graph(g)?;
    let table = g.cut_table()?;
    let (z, w) = table
        .iter()
        .enumerate()
        .step_by(2)
        .fold((0, f64::NEG_INFINITY), |acc, (z, &w)| if w > acc.1 { (z, w) } else { acc });
    Ok((Bitstring::from_index(g.n(), z), w))
}
