mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use q4dr_core::instance::UseCase;
use q4dr_core::route_model::{decode, encode, route_cost, to_qubo, ModelKind};
use q4dr_core::solvers::brute_force;

use common::{penalty_case, qubo_ground_state, random_model, rel_close};

#[test]
fn qubo_ground_state_is_the_route_optimum() {
    // 25 closed subproblems with n <= 5, 25 open ones with n <= 4 and m = 2
    for case in 0..50u64 {
        let m = penalty_case(case);
        let qubo = to_qubo(&m);
        let (bits, energy) = qubo_ground_state(&qubo);
        let route = decode(&m, &bits).unwrap_or_else(|e| panic!("case {case}: ground state infeasible: {e}"));
        let oracle = brute_force(&m).unwrap();
        assert!(
            rel_close(route.cost, oracle.route.cost, 1e-9),
            "case {case}: ground state {} vs brute force {}",
            route.cost,
            oracle.route.cost
        );
        assert!(rel_close(energy, route.cost, 1e-9));
    }
}

#[test]
fn single_violation_costs_at_least_the_penalty() {
    // closed n = 3: removing one x from a feasible assignment breaks one
    // node and one position constraint
    let (_, m) = random_model(UseCase::Uc1, 6, 3, 11);
    let qubo = to_qubo(&m);
    let opt = brute_force(&m).unwrap().route.cost;
    let feasible = encode(&m, &m.route_from_order(&[1, 2, 3], None)).unwrap();
    for v in 0..m.num_vars() {
        if feasible[v] {
            let mut broken = feasible.clone();
            broken[v] = false;
            assert!(qubo.energy(&broken) >= opt + qubo.penalty_weight - 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_round_trip(seed in any::<u64>(), k in 1usize..8, open in any::<bool>()) {
        let uc = if open { UseCase::Uc3 } else { UseCase::Uc2 };
        let (inst, m) = random_model(uc, 9, k, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (1..=k).collect();
        order.shuffle(&mut rng);
        let station = if open { Some(rng.random_range(1..=m.m())) } else { None };
        let route = m.route_from_order(&order, station);
        let bits = encode(&m, &route).unwrap();
        prop_assert_eq!(bits.iter().filter(|&&b| b).count(), k + usize::from(open));
        let back = decode(&m, &bits).unwrap();
        prop_assert_eq!(&back, &route);
        prop_assert!(rel_close(route_cost(&route, inst.costs()), route.cost, 1e-12));
        // a feasible assignment pays no penalty
        let e = to_qubo(&m).energy(&bits);
        prop_assert!(rel_close(e, route.cost, 1e-9));
        prop_assert_eq!(m.kind() == ModelKind::OpenCharging, open);
    }

    #[test]
    fn constraint_counts(k in 1usize..7, open in any::<bool>()) {
        let uc = if open { UseCase::Uc3 } else { UseCase::Uc1 };
        let (_, m) = random_model(uc, 9, k, k as u64);
        let stations = if open { 3 } else { 0 };
        prop_assert_eq!(m.num_vars(), k * k + stations);
        prop_assert_eq!(m.constraints().len(), 2 * k + usize::from(open));
    }
}
