use std::thread;
use std::time::Instant;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::anneal::{anneal_compiled, refine, repair, AnnealSchedule, CompiledQubo};
use super::exact::{path_dp, HELD_KARP_MAX_N};
use super::{worker_seed, SolveError, SolveResult, SolverConfig, TraceEntry};
use crate::route_model::{decode, encode, to_qubo, RouteModel};

struct Candidate {
    order: Vec<usize>,
    cost: f64,
    restart: usize,
}

struct ThreadOutcome {
    best: Candidate,
    trace: Vec<TraceEntry>,
}

struct Plan<'a> {
    model: &'a RouteModel,
    qubo: CompiledQubo,
    schedule: AnnealSchedule,
    refine_schedule: AnnealSchedule,
    guided: bool,
}

impl Plan<'_> {
    fn run_thread(&self, cfg: &SolverConfig, thread: usize) -> ThreadOutcome {
        let mut best: Option<Candidate> = None;
        let mut trace = Vec::with_capacity(cfg.restarts);
        for restart in 0..cfg.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(cfg.seed, thread, restart));
            let sample = anneal_compiled(&self.qubo, &self.schedule, &mut rng);
            let raw_feasible = decode(self.model, &sample.assignment).is_ok();
            let mut order = repair(self.model, &sample.assignment);
            let mut cost = self.model.order_cost(&order, None);
            if self.guided {
                let start = match &best {
                    Some(b) if b.cost < cost => b.order.clone(),
                    _ => order,
                };
                (order, cost) = refine(self.model, &start, &self.refine_schedule, &mut rng);
            }
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(Candidate { order, cost, restart });
            }
            let best_cost = best.as_ref().map_or(cost, |b| b.cost);
            trace.push(TraceEntry {
                thread,
                restart,
                energy: sample.energy,
                feasible: raw_feasible,
                best: best_cost,
            });
        }
        ThreadOutcome {
            best: best.expect("at least one restart"),
            trace,
        }
    }
}

fn run(model: &RouteModel, cfg: &SolverConfig, threads: usize, guided: bool, name: &str) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let started = Instant::now();
    let qubo = to_qubo(model);
    let schedule = AnnealSchedule::for_qubo(&qubo, cfg.sweeps, cfg.t_hi, cfg.t_lo);
    let refine_hi = (0.25 * model.max_finite_arc()).max(schedule.t_lo * 2.0);
    let plan = Plan {
        model,
        qubo: CompiledQubo::new(&qubo),
        schedule,
        refine_schedule: AnnealSchedule {
            sweeps: cfg.sweeps,
            t_hi: refine_hi,
            t_lo: schedule.t_lo,
        },
        guided,
    };
    let outcomes: Vec<ThreadOutcome> = if threads == 1 {
        vec![plan.run_thread(cfg, 0)]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let plan = &plan;
                    s.spawn(move || plan.run_thread(cfg, t))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        })
    };
    // deterministic reduction: lowest cost, then lowest thread id
    let mut winner = 0;
    for (t, o) in outcomes.iter().enumerate() {
        if o.best.cost < outcomes[winner].best.cost {
            winner = t;
        }
    }
    let trace: Vec<TraceEntry> = outcomes.iter().flat_map(|o| o.trace.iter().cloned()).collect();
    let best = &outcomes[winner].best;
    for t in &trace {
        debug!("{t}");
    }

    if best.cost >= model.big_m() {
        if model.n() > HELD_KARP_MAX_N {
            return Err(SolveError::NoFeasibleSolution);
        }
        warn!("{name}: no route without forbidden arcs found, falling back to the exact solver");
        let mut exact = path_dp(model)?;
        if !exact.feasible {
            return Err(SolveError::NoFeasibleSolution);
        }
        exact.trace = trace;
        exact.wall_time = started.elapsed();
        return Ok(exact);
    }

    let route = model.route_from_order(&best.order, None);
    let bits = encode(model, &route).expect("route built from the model");
    Ok(SolveResult {
        energy: qubo.energy(&bits),
        feasible: true,
        route,
        solver: name.into(),
        thread_id: Some(winner),
        restart_id: Some(best.restart),
        wall_time: started.elapsed(),
        trace,
    })
}

/// One annealing thread on the QUBO; samples are repaired into routes.
pub fn sa_solve(model: &RouteModel, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    run(model, cfg, 1, false, "sa")
}

/// `cfg.threads` annealing threads, each refining its samples by annealing
/// over visiting orders seeded from its best route so far. The result is
/// independent of thread scheduling.
pub fn portfolio_solve(model: &RouteModel, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    run(model, cfg, cfg.threads, true, "portfolio")
}
