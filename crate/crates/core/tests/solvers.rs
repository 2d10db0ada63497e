mod common;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use q4dr_core::instance::{generate_instance, GeneratorConfig, UseCase};
use q4dr_core::route_model::{route_cost, QuadraticForm, QuboForm, RouteModel};
use q4dr_core::solvers::{
    anneal, brute_force, held_karp, path_dp, portfolio_solve, sa_solve, solver_registry, AnnealSchedule, SolveError,
    SolverConfig,
};

use common::{fixture_a, fixture_b, instance_from_matrix, model, rel_close};

fn random_subproblem(uc: UseCase, k: usize, seed: u64) -> RouteModel {
    let n_inst = k + 3;
    let inst = generate_instance(uc, n_inst, seed, &GeneratorConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
    let mut nodes: Vec<usize> = (0..n_inst).collect();
    nodes.shuffle(&mut rng);
    let mut cluster = nodes[..k].to_vec();
    cluster.sort_unstable();
    let depot = inst.depot_index(rng.random_range(0..uc.depot_count()));
    model(&inst, &cluster, depot)
}

fn quick() -> SolverConfig {
    SolverConfig {
        sweeps: 2000,
        restarts: 3,
        ..SolverConfig::default()
    }
}

#[test]
fn single_node_closed_tour() {
    let inst = fixture_a(&[]);
    let r = brute_force(&model(&inst, &[3], 4)).unwrap();
    assert_eq!(r.route.sequence, vec![4, 3, 4]);
    assert_eq!(r.route.cost, 25.0);
}

#[test]
fn three_node_closed_tour() {
    let inst = fixture_a(&[]);
    let m = model(&inst, &[0, 1, 2], 4);
    for r in [brute_force(&m).unwrap(), held_karp(&m).unwrap(), path_dp(&m).unwrap()] {
        assert_eq!(r.route.sequence, vec![4, 0, 2, 1, 4], "{}", r.solver);
        assert_eq!(r.route.cost, 53.0);
        assert!(r.feasible);
    }
}

#[test]
fn three_node_open_route() {
    let inst = fixture_b();
    let m = model(&inst, &[0, 1, 2], 6);
    for r in [brute_force(&m).unwrap(), path_dp(&m).unwrap()] {
        assert_eq!(r.route.sequence, vec![6, 2, 1, 0, 8], "{}", r.solver);
        assert_eq!(r.route.cost, 28.0);
    }
    assert!(matches!(held_karp(&m), Err(SolveError::WrongKind { .. })));
}

#[test]
fn unit_square_perimeter() {
    // depot (0,0), nodes (1,0), (1,1), (0,1), centre (0.5,0.5)
    let xy = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.0, 0.0)];
    let rows: Vec<Vec<f64>> = xy
        .iter()
        .map(|&(ax, ay): &(f64, f64)| xy.iter().map(|&(bx, by)| ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()).collect())
        .collect();
    let inst = instance_from_matrix(UseCase::Uc1, 4, &rows, &[]);
    let m = model(&inst, &[0, 1, 2], 4);
    assert!(rel_close(held_karp(&m).unwrap().route.cost, 4.0, 1e-12));
    assert!(rel_close(portfolio_solve(&m, &quick()).unwrap().route.cost, 4.0, 1e-12));
}

#[test]
fn forbidden_arc_changes_the_optimum() {
    let free = fixture_a(&[]);
    let r = held_karp(&model(&free, &[0, 1, 2, 3], 4)).unwrap();
    assert_eq!((r.route.sequence.clone(), r.route.cost), (vec![4, 0, 1, 2, 3, 4], 44.0));

    let blocked = fixture_a(&[(1, 2)]);
    let m = model(&blocked, &[0, 1, 2, 3], 4);
    for r in [held_karp(&m).unwrap(), brute_force(&m).unwrap(), portfolio_solve(&m, &quick()).unwrap()] {
        assert_eq!(r.route.sequence, vec![4, 3, 2, 1, 0, 4], "{}", r.solver);
        assert_eq!(r.route.cost, 61.0);
        assert!(r.route.arcs().all(|a| a != (1, 2)));
    }
}

#[test]
fn size_guards() {
    let m = random_subproblem(UseCase::Uc1, 10, 3);
    assert!(matches!(brute_force(&m), Err(SolveError::SizeGuard { n: 10, .. })));
    let m = random_subproblem(UseCase::Uc1, 21, 3);
    assert!(matches!(held_karp(&m), Err(SolveError::SizeGuard { n: 21, .. })));
    assert!(matches!(path_dp(&m), Err(SolveError::SizeGuard { .. })));
}

#[test]
fn held_karp_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let k = rng.random_range(4..=8);
        let uc = if case % 2 == 0 { UseCase::Uc1 } else { UseCase::Uc2 };
        let m = random_subproblem(uc, k, rng.random());
        let hk = held_karp(&m).unwrap();
        let bf = brute_force(&m).unwrap();
        assert!(rel_close(hk.route.cost, bf.route.cost, 1e-9), "case {case}");
    }
}

#[test]
fn open_dp_agrees_with_brute_force() {
    for seed in 0..20 {
        let m = random_subproblem(UseCase::Uc3, 2 + (seed as usize % 6), seed);
        let dp = path_dp(&m).unwrap();
        let bf = brute_force(&m).unwrap();
        assert!(rel_close(dp.route.cost, bf.route.cost, 1e-9), "seed {seed}");
    }
}

fn qubo(linear: &[(usize, f64)], quadratic: &[((usize, usize), f64)], n: usize) -> QuboForm {
    QuboForm {
        form: QuadraticForm {
            linear: linear.iter().copied().collect::<BTreeMap<_, _>>(),
            quadratic: quadratic.iter().copied().collect::<BTreeMap<_, _>>(),
            offset: 0.0,
        },
        num_vars: n,
        penalty_weight: 10.0,
    }
}

#[test]
fn anneal_small_qubos() {
    let q = qubo(&[(0, -1.0)], &[], 1);
    let out = anneal(&q, &AnnealSchedule::for_qubo(&q, 200, None, None), 1);
    assert_eq!((out.assignment, out.energy), (vec![true], -1.0));

    let q = qubo(&[(0, -1.0), (1, -1.0)], &[((0, 1), 10.0)], 2);
    for seed in 0..10 {
        let out = anneal(&q, &AnnealSchedule::for_qubo(&q, 200, None, None), seed);
        assert_eq!(out.assignment.iter().filter(|&&b| b).count(), 1);
        assert_eq!(out.energy, -1.0);
    }

    let q = qubo(&[], &[], 3);
    let out = anneal(&q, &AnnealSchedule::for_qubo(&q, 50, None, None), 0);
    assert_eq!(out.energy, 0.0);
}

#[test]
fn portfolio_finds_small_optima() {
    let mut hits = 0;
    let mut misses = Vec::new();
    for case in 0..100u64 {
        let k = 5 + (case as usize % 5);
        let uc = [UseCase::Uc1, UseCase::Uc2, UseCase::Uc3][case as usize % 3];
        let m = random_subproblem(uc, k, 500 + case);
        let cfg = SolverConfig {
            seed: case,
            ..SolverConfig::default()
        };
        let got = portfolio_solve(&m, &cfg).unwrap();
        let want = brute_force(&m).unwrap();
        assert!(got.route.cost >= want.route.cost - 1e-9);
        if rel_close(got.route.cost, want.route.cost, 1e-9) {
            hits += 1;
        } else {
            misses.push((case, got.route.cost, want.route.cost));
        }
    }
    assert!(hits >= 95, "{hits}/100 optimal, misses {misses:?}");
}

#[test]
fn more_threads_never_worse() {
    for seed in 0..5 {
        let m = random_subproblem(UseCase::Uc2, 10, 40 + seed);
        let one = portfolio_solve(&m, &SolverConfig { threads: 1, seed, ..quick() }).unwrap();
        let four = portfolio_solve(&m, &SolverConfig { threads: 4, seed, ..quick() }).unwrap();
        assert!(four.route.cost <= one.route.cost + 1e-9, "seed {seed}");
    }
}

#[test]
fn all_tours_forbidden() {
    // both orders of {0, 1} need 0->1 or 1->0; the rest of the matrix stays connected
    let inst = fixture_a(&[(0, 1), (1, 0)]);
    let m = model(&inst, &[0, 1], 4);
    assert!(matches!(portfolio_solve(&m, &quick()), Err(SolveError::NoFeasibleSolution { .. })));
    assert!(matches!(sa_solve(&m, &quick()), Err(SolveError::NoFeasibleSolution { .. })));
    let exact = held_karp(&m).unwrap();
    assert!(!exact.feasible);
}

#[test]
fn deterministic_under_seed() {
    let m = random_subproblem(UseCase::Uc3, 11, 9);
    let cfg = SolverConfig { seed: 77, ..quick() };
    let a = portfolio_solve(&m, &cfg).unwrap();
    let b = portfolio_solve(&m, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn trace_best_is_monotone_per_thread() {
    let m = random_subproblem(UseCase::Uc2, 12, 5);
    let r = portfolio_solve(&m, &quick()).unwrap();
    assert_eq!(r.trace.len(), 4 * 3);
    for t in 0..4 {
        let bests: Vec<f64> = r.trace.iter().filter(|e| e.thread == t).map(|e| e.best).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]), "thread {t}: {bests:?}");
    }
    let overall = r.trace.iter().map(|e| e.best).fold(f64::INFINITY, f64::min);
    assert!(rel_close(overall, r.route.cost, 1e-9));
}

#[test]
fn reported_energy_matches_route_cost() {
    let inst = fixture_b();
    let m = model(&inst, &[0, 1, 2, 3, 4], 7);
    let r = portfolio_solve(&m, &quick()).unwrap();
    assert!(r.feasible);
    assert!(rel_close(r.energy, r.route.cost, 1e-9));
    assert!(rel_close(route_cost(&r.route, inst.costs()), r.route.cost, 1e-12));
}

#[test]
fn registry_dispatch() {
    let reg = solver_registry();
    let names: Vec<&str> = reg.names().collect();
    assert_eq!(names, ["brute-force", "exact", "held-karp", "portfolio", "sa"]);
    let m = model(&fixture_a(&[]), &[0, 1, 2], 4);
    for name in names {
        let r = reg.get(name).unwrap().solve(&m, &quick()).unwrap();
        assert_eq!(r.route.cost, 53.0, "{name}");
    }
}
