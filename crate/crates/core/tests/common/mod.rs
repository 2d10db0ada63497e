#![allow(dead_code)]

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use q4dr_core::assignment::Subproblem;
use q4dr_core::instance::{generate_instance, CostMatrix, GeoPoint, GeneratorConfig, Instance, UseCase};
use q4dr_core::route_model::{build_model, RouteModel};

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn points(k: usize, lat0: f64) -> Vec<GeoPoint> {
    (0..k).map(|i| pt(lat0 + 0.01 * i as f64, -2.9 - 0.01 * i as f64)).collect()
}

/// Instance over a hand-written cost matrix; coordinates are placeholders.
pub fn instance_from_matrix(
    use_case: UseCase,
    n: usize,
    rows: &[Vec<f64>],
    forbidden: &[(usize, usize)],
) -> Instance {
    let size = rows.len();
    let costs = CostMatrix::new(
        size,
        rows.iter().flatten().copied().collect(),
        forbidden.iter().copied().collect::<BTreeSet<_>>(),
    )
    .unwrap();
    let d = use_case.depot_count();
    Instance::new(
        use_case,
        0,
        points(n, 43.21),
        points(d, 43.30),
        points(size - n - d, 43.25),
        costs,
    )
    .unwrap()
}

/// UC1, four visiting nodes, depot 4.
pub fn fixture_a(forbidden: &[(usize, usize)]) -> Instance {
    let rows = [
        [0, 12, 19, 31, 8],
        [14, 0, 9, 22, 17],
        [25, 11, 0, 7, 29],
        [16, 27, 13, 0, 10],
        [6, 18, 24, 15, 0],
    ];
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    instance_from_matrix(UseCase::Uc1, 4, &rows, forbidden)
}

/// UC3, six visiting nodes, depots 6 and 7, stations 8 and 9.
pub fn fixture_b() -> Instance {
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|i| {
            (0..10)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        (((i * 7 + j * 13) % 17) + 1 + (i + j) % 3) as f64
                    }
                })
                .collect()
        })
        .collect();
    instance_from_matrix(UseCase::Uc3, 6, &rows, &[])
}

pub fn model(inst: &Instance, cluster: &[usize], depot: usize) -> RouteModel {
    let sub = Subproblem {
        cluster: cluster.to_vec(),
        depot,
        charging: inst.charging_indices().collect(),
        closed: inst.use_case().closed_routes(),
    };
    build_model(&sub, inst).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Exhaustive QUBO minimum by Gray-code enumeration with local fields; the
/// running energy is re-synchronized periodically to bound rounding drift.
pub fn qubo_ground_state(q: &q4dr_core::route_model::QuboForm) -> (Vec<bool>, f64) {
    let n = q.num_vars;
    assert!(n <= 30, "too many variables for enumeration");
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(a, b), &c) in &q.form.quadratic {
        adj[a].push((b, c));
        adj[b].push((a, c));
    }
    let mut field: Vec<f64> = (0..n).map(|v| q.form.linear.get(&v).copied().unwrap_or(0.0)).collect();
    let mut x = vec![false; n];
    let mut energy = q.energy(&x);
    let mut best = (x.clone(), energy);
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let delta = if x[v] { -field[v] } else { field[v] };
        x[v] = !x[v];
        energy += delta;
        let sign = if x[v] { 1.0 } else { -1.0 };
        for &(u, c) in &adj[v] {
            field[u] += sign * c;
        }
        if step % 4096 == 0 {
            energy = q.energy(&x);
        }
        if energy < best.1 + 1e-6 * best.1.abs().max(1.0) {
            let exact = q.energy(&x);
            if exact < best.1 {
                best = (x.clone(), exact);
            }
        }
    }
    best
}

type Mat4 = [[Complex64; 4]; 4];

fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `<-cut>` of the one-edge, depth-1 QAOA state from explicit 4x4 matrices.
/// Basis index bit 0 is qubit 0.
pub fn dense_one_edge(w: f64, gamma: f64, beta: f64) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut cost = [[zero; 4]; 4];
    for z in 0..4usize {
        let zz = if (z & 1) == (z >> 1) { 1.0 } else { -1.0 };
        cost[z][z] = Complex64::cis(-gamma * w * zz);
    }
    let (c, s) = (beta.cos(), beta.sin());
    let rx = [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ];
    let mut mixer = [[zero; 4]; 4];
    for i in 0..4usize {
        for j in 0..4usize {
            mixer[i][j] = rx[i >> 1][j >> 1] * rx[i & 1][j & 1];
        }
    }
    let u = matmul(&mixer, &cost);
    let psi0 = [Complex64::new(0.5, 0.0); 4];
    let psi: Vec<Complex64> = (0..4).map(|i| (0..4).map(|k| u[i][k] * psi0[k]).sum()).collect();
    -w * (psi[1].norm_sqr() + psi[2].norm_sqr())
}


/// Random subproblem of a generated instance: `k` visiting nodes and a
/// random depot.
pub fn random_model(uc: UseCase, n_inst: usize, k: usize, seed: u64) -> (Instance, RouteModel) {
    let inst = generate_instance(uc, n_inst, seed, &GeneratorConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut nodes: Vec<usize> = (0..n_inst).collect();
    nodes.shuffle(&mut rng);
    let mut cluster = nodes[..k].to_vec();
    cluster.sort_unstable();
    let depot = inst.depot_index(rng.random_range(0..uc.depot_count()));
    let m = model(&inst, &cluster, depot);
    (inst, m)
}

/// Subproblem `case` of the penalty-soundness sample: cases 0..25 are closed
/// with n <= 5, the rest open with n <= 4 and two stations.
pub fn penalty_case(case: u64) -> RouteModel {
    let (uc, n_inst, k) = if case < 25 {
        (UseCase::Uc2, 8, 1 + (case as usize % 5))
    } else {
        (UseCase::Uc3, 6, 1 + (case as usize % 4))
    };
    random_model(uc, n_inst, k, case).1
}
