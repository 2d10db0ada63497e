use std::time::Instant;

use super::{SolveError, SolveResult};
use crate::route_model::{ModelKind, RouteModel};

pub const BRUTE_FORCE_MAX_N: usize = 9;
pub const HELD_KARP_MAX_N: usize = 20;

fn exact_result(model: &RouteModel, order: &[usize], solver: &str, started: Instant) -> SolveResult {
    let route = model.route_from_order(order, None);
    SolveResult {
        energy: route.cost,
        feasible: route.cost < model.big_m(),
        route,
        solver: solver.into(),
        thread_id: None,
        restart_id: None,
        wall_time: started.elapsed(),
        trace: Vec::new(),
    }
}

/// Rearranges `v` into the next lexicographic permutation; false when `v`
/// was the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Exact optimum by enumerating every visiting order; open routes take the
/// cheapest station after the last node, which is exact because the station
/// only enters through the final arc. Ties keep the lexicographically first
/// order.
pub fn brute_force(model: &RouteModel) -> Result<SolveResult, SolveError> {
    let n = model.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SolveError::SizeGuard {
            solver: "brute-force",
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let started = Instant::now();
    let mut order: Vec<usize> = (1..=n).collect();
    let mut best = order.clone();
    let mut best_cost = model.order_cost(&order, None);
    while next_permutation(&mut order) {
        let c = model.order_cost(&order, None);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&order);
        }
    }
    Ok(exact_result(model, &best, "brute-force", started))
}

/// Held-Karp dynamic program for closed tours.
pub fn held_karp(model: &RouteModel) -> Result<SolveResult, SolveError> {
    if model.kind() != ModelKind::ClosedTour {
        return Err(SolveError::WrongKind {
            solver: "held-karp",
            kind: model.kind().to_string(),
        });
    }
    let mut res = path_dp(model)?;
    res.solver = "held-karp".into();
    Ok(res)
}

/// Subset dynamic program over paths starting at the depot, `O(n^2 2^n)`.
///
/// `best[S][j]` is the cheapest path from the depot through exactly the nodes
/// of `S`, ending at `j`. Closed tours add the return arc, open routes the
/// cheapest station arc.
pub fn path_dp(model: &RouteModel) -> Result<SolveResult, SolveError> {
    let n = model.n();
    if n > HELD_KARP_MAX_N {
        return Err(SolveError::SizeGuard {
            solver: "held-karp",
            n,
            max: HELD_KARP_MAX_N,
        });
    }
    let started = Instant::now();
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; (full + 1) * n];
    let mut parent = vec![u8::MAX; (full + 1) * n];
    for j in 0..n {
        best[(1 << j) * n + j] = model.arc(0, j + 1);
    }
    for set in 1..=full {
        for last in 0..n {
            let here = best[set * n + last];
            if set & (1 << last) == 0 || !here.is_finite() {
                continue;
            }
            for next in 0..n {
                if set & (1 << next) != 0 {
                    continue;
                }
                let cand = here + model.arc(last + 1, next + 1);
                let slot = (set | (1 << next)) * n + next;
                if cand < best[slot] {
                    best[slot] = cand;
                    parent[slot] = last as u8;
                }
            }
        }
    }
    let closing = |last: usize| match model.kind() {
        ModelKind::ClosedTour => model.arc(last + 1, 0),
        ModelKind::OpenCharging => model.best_station(last + 1).map_or(0.0, |s| s.1),
    };
    let mut end = 0;
    let mut end_cost = f64::INFINITY;
    for last in 0..n {
        let c = best[full * n + last] + closing(last);
        if c < end_cost {
            end_cost = c;
            end = last;
        }
    }
    let mut order = Vec::with_capacity(n);
    let (mut set, mut cur) = (full, end);
    loop {
        order.push(cur + 1);
        let p = parent[set * n + cur];
        set &= !(1 << cur);
        if p == u8::MAX {
            break;
        }
        cur = p as usize;
    }
    order.reverse();
    debug_assert_eq!(order.len(), n);
    Ok(exact_result(model, &order, "exact", started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_in_order() {
        let mut v = vec![1, 2, 3];
        let mut all = vec![v.clone()];
        while next_permutation(&mut v) {
            all.push(v.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], vec![1, 3, 2]);
        assert_eq!(all[5], vec![3, 2, 1]);
    }
}
