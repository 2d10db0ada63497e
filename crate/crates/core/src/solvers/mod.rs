//! Route solvers behind one trait, selectable by name.
//!
//! | name          | method                                                  |
//! |---------------|---------------------------------------------------------|
//! | `brute-force` | permutation enumeration, `n <= 9`                       |
//! | `held-karp`   | subset dynamic program, closed tours, `n <= 20`         |
//! | `exact`       | Held-Karp for closed tours, the same DP for open routes |
//! | `sa`          | one annealing thread on the QUBO plus repair            |
//! | `portfolio`   | parallel annealing threads with guided refinement       |

mod anneal;
mod exact;
mod portfolio;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::route_model::{Route, RouteModel};

pub use anneal::{anneal, AnnealOutcome, AnnealSchedule};
pub use exact::{brute_force, held_karp, path_dp, BRUTE_FORCE_MAX_N, HELD_KARP_MAX_N};
pub use portfolio::{portfolio_solve, sa_solve};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("{solver} supports at most {max} visiting nodes, got {n}")]
    SizeGuard { solver: &'static str, n: usize, max: usize },
    #[error("{solver} does not handle {kind} models")]
    WrongKind { solver: &'static str, kind: String },
    #[error("no feasible route avoids forbidden arcs")]
    NoFeasibleSolution,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Sa,
    Portfolio,
}

impl SolverKind {
    /// Registry name of the solver.
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Sa => "sa",
            SolverKind::Portfolio => "portfolio",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "sa" => Ok(SolverKind::Sa),
            "portfolio" => Ok(SolverKind::Portfolio),
            other => Err(SolveError::UnknownSolver(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub threads: usize,
    /// Sweeps per annealing run; a sweep proposes one flip per variable.
    pub sweeps: usize,
    /// Restarts per thread.
    pub restarts: usize,
    /// Start temperature; defaults to the penalty weight.
    pub t_hi: Option<f64>,
    /// End temperature; defaults to 1% of the smallest non-zero coefficient.
    pub t_lo: Option<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Portfolio,
            threads: 4,
            sweeps: 10_000,
            restarts: 8,
            t_hi: None,
            t_lo: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.threads == 0 || self.sweeps == 0 || self.restarts == 0 {
            return Err(SolveError::InvalidConfig(
                "threads, sweeps and restarts must all be at least 1".into(),
            ));
        }
        for t in [self.t_hi, self.t_lo].into_iter().flatten() {
            if !t.is_finite() || t <= 0.0 {
                return Err(SolveError::InvalidConfig(format!("temperature {t} must be > 0")));
            }
        }
        if let (Some(hi), Some(lo)) = (self.t_hi, self.t_lo) {
            if hi <= lo {
                return Err(SolveError::InvalidConfig(format!(
                    "t_hi ({hi}) must exceed t_lo ({lo})"
                )));
            }
        }
        Ok(())
    }
}

/// One line of the solver trace, written per restart.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub thread: usize,
    pub restart: usize,
    /// QUBO energy of the raw annealer sample.
    pub energy: f64,
    /// Whether the raw sample satisfied every constraint.
    pub feasible: bool,
    /// Best route cost of this thread so far.
    pub best: f64,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "thread={} restart={} energy={:.6} feasible={} best={:.6}",
            self.thread, self.restart, self.energy, self.feasible, self.best
        )
    }
}

/// Renders a trace, one entry per line.
pub fn format_trace(trace: &[TraceEntry]) -> String {
    trace.iter().map(|t| format!("{t}\n")).collect()
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub route: Route,
    /// Model energy of the route; equals the route cost when feasible.
    pub energy: f64,
    pub feasible: bool,
    pub solver: String,
    pub thread_id: Option<usize>,
    pub restart_id: Option<usize>,
    pub wall_time: Duration,
    pub trace: Vec<TraceEntry>,
}

/// Equality ignores `wall_time`.
impl PartialEq for SolveResult {
    fn eq(&self, other: &Self) -> bool {
        self.route == other.route
            && self.energy == other.energy
            && self.feasible == other.feasible
            && self.solver == other.solver
            && self.thread_id == other.thread_id
            && self.restart_id == other.restart_id
            && self.trace == other.trace
    }
}

/// A routing strategy.
pub trait RouteSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Solves `model`; errors with [`SolveError::NoFeasibleSolution`] when the
    /// best route found still uses a forbidden arc.
    fn solve(&self, model: &RouteModel, cfg: &SolverConfig) -> Result<SolveResult, SolveError>;
}

pub type SolverRegistry = Registry<dyn RouteSolver>;

fn require_feasible(res: SolveResult) -> Result<SolveResult, SolveError> {
    if res.feasible {
        Ok(res)
    } else {
        Err(SolveError::NoFeasibleSolution)
    }
}

pub struct BruteForceSolver;

impl RouteSolver for BruteForceSolver {
    fn name(&self) -> &'static str {
        "brute-force"
    }

    fn solve(&self, model: &RouteModel, _cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        brute_force(model).and_then(require_feasible)
    }
}

pub struct HeldKarpSolver;

impl RouteSolver for HeldKarpSolver {
    fn name(&self) -> &'static str {
        "held-karp"
    }

    fn solve(&self, model: &RouteModel, _cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        held_karp(model).and_then(require_feasible)
    }
}

/// Held-Karp for closed tours, the open-route variant of the same dynamic
/// program otherwise.
pub struct ExactSolver;

impl RouteSolver for ExactSolver {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, model: &RouteModel, _cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        path_dp(model).and_then(require_feasible)
    }
}

pub struct AnnealSolver;

impl RouteSolver for AnnealSolver {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn solve(&self, model: &RouteModel, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        sa_solve(model, cfg)
    }
}

pub struct PortfolioSolver;

impl RouteSolver for PortfolioSolver {
    fn name(&self) -> &'static str {
        "portfolio"
    }

    fn solve(&self, model: &RouteModel, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        portfolio_solve(model, cfg)
    }
}

/// Registry holding every built-in solver.
pub fn solver_registry() -> SolverRegistry {
    let mut reg = SolverRegistry::new();
    let solvers: [Arc<dyn RouteSolver>; 5] = [
        Arc::new(BruteForceSolver),
        Arc::new(HeldKarpSolver),
        Arc::new(ExactSolver),
        Arc::new(AnnealSolver),
        Arc::new(PortfolioSolver),
    ];
    for s in solvers {
        reg.register(s.name(), s);
    }
    reg
}

/// SplitMix64 finalizer; derives independent worker seeds.
pub(crate) fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of restart `restart` on thread `thread`.
pub fn worker_seed(master: u64, thread: usize, restart: usize) -> u64 {
    mix_seed(mix_seed(mix_seed(master) ^ thread as u64) ^ restart as u64)
}
