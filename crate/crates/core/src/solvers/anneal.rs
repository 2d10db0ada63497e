use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::route_model::{QuboForm, RouteModel};

/// Geometric temperature schedule over `sweeps` sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub t_hi: f64,
    pub t_lo: f64,
}

impl AnnealSchedule {
    /// Defaults: `t_hi` is the penalty weight, `t_lo` 1% of the smallest
    /// non-zero coefficient.
    pub fn for_qubo(qubo: &QuboForm, sweeps: usize, t_hi: Option<f64>, t_lo: Option<f64>) -> Self {
        let hi = t_hi.unwrap_or(qubo.penalty_weight);
        let lo = t_lo.unwrap_or_else(|| 0.01 * qubo.form.min_abs_coefficient().unwrap_or(1.0));
        Self {
            sweeps,
            t_hi: hi,
            t_lo: lo.min(hi),
        }
    }

    pub fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_lo;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_hi * (self.t_lo / self.t_hi).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    /// Lowest-energy assignment visited.
    pub assignment: Vec<bool>,
    pub energy: f64,
}

/// QUBO in adjacency form for fast local-field updates.
pub(crate) struct CompiledQubo {
    linear: Vec<f64>,
    start: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
    offset: f64,
}

impl CompiledQubo {
    pub(crate) fn new(qubo: &QuboForm) -> Self {
        let n = qubo.num_vars;
        let mut linear = vec![0.0; n];
        for (&v, &c) in &qubo.form.linear {
            linear[v] += c;
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(a, b), &c) in &qubo.form.quadratic {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut neighbor = Vec::new();
        let mut weight = Vec::new();
        start.push(0);
        for row in adj {
            for (b, c) in row {
                neighbor.push(b);
                weight.push(c);
            }
            start.push(neighbor.len());
        }
        Self {
            linear,
            start,
            neighbor,
            weight,
            offset: qubo.form.offset,
        }
    }

    fn len(&self) -> usize {
        self.linear.len()
    }

    fn energy(&self, x: &[bool]) -> f64 {
        let mut e = self.offset;
        for v in 0..self.len() {
            if !x[v] {
                continue;
            }
            e += self.linear[v];
            for k in self.start[v]..self.start[v + 1] {
                let u = self.neighbor[k];
                if u > v && x[u] {
                    e += self.weight[k];
                }
            }
        }
        e
    }
}

/// Single-flip Metropolis annealing from a uniformly random assignment.
pub fn anneal(qubo: &QuboForm, schedule: &AnnealSchedule, seed: u64) -> AnnealOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    anneal_compiled(&CompiledQubo::new(qubo), schedule, &mut rng)
}

pub(crate) fn anneal_compiled(q: &CompiledQubo, schedule: &AnnealSchedule, rng: &mut ChaCha8Rng) -> AnnealOutcome {
    let n = q.len();
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    // field[v] = energy change of setting x[v] from 0 to 1
    let mut field = q.linear.clone();
    for v in 0..n {
        if x[v] {
            for k in q.start[v]..q.start[v + 1] {
                field[q.neighbor[k]] += q.weight[k];
            }
        }
    }
    let mut energy = q.energy(&x);
    let mut best = x.clone();
    let mut best_energy = energy;
    for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(sweep);
        for v in 0..n {
            let delta = if x[v] { -field[v] } else { field[v] };
            if delta > 0.0 && rng.random::<f64>() >= (-delta / t).exp() {
                continue;
            }
            x[v] = !x[v];
            energy += delta;
            let sign = if x[v] { 1.0 } else { -1.0 };
            for k in q.start[v]..q.start[v + 1] {
                field[q.neighbor[k]] += sign * q.weight[k];
            }
            if energy < best_energy {
                best_energy = energy;
                best.copy_from_slice(&x);
            }
        }
    }
    // recompute to drop accumulated rounding
    let energy = q.energy(&best);
    AnnealOutcome {
        assignment: best,
        energy,
    }
}

/// Turns any assignment into a visiting order: positions holding exactly one
/// unused node keep it, the rest take the cheapest unused node from the
/// previous stop.
pub(crate) fn repair(model: &RouteModel, bits: &[bool]) -> Vec<usize> {
    let n = model.n();
    let mut order = vec![0usize; n];
    let mut used = vec![false; n + 1];
    for p in 1..=n {
        let mut at = (1..=n).filter(|&i| bits[model.x(i, p)]);
        if let (Some(i), None) = (at.next(), at.next()) {
            if !used[i] {
                order[p - 1] = i;
                used[i] = true;
            }
        }
    }
    for p in 0..n {
        if order[p] != 0 {
            continue;
        }
        let prev = if p == 0 { 0 } else { order[p - 1] };
        let pick = (1..=n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| model.arc(prev, a).total_cmp(&model.arc(prev, b)))
            .expect("an unused node remains");
        order[p] = pick;
        used[pick] = true;
    }
    order
}

/// Annealing over visiting orders with swap, reversal and relocation moves;
/// every state is a valid route, so the energy is the route cost.
pub(crate) fn refine(
    model: &RouteModel,
    start: &[usize],
    schedule: &AnnealSchedule,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = start.len();
    let mut cur = start.to_vec();
    let mut cost = model.order_cost(&cur, None);
    let mut best = cur.clone();
    let mut best_cost = cost;
    if n < 2 {
        return (best, best_cost);
    }
    let mut cand = cur.clone();
    for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(sweep);
        for _ in 0..n {
            cand.copy_from_slice(&cur);
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            match rng.random_range(0..3u8) {
                0 => cand.swap(i, j),
                1 => cand[i.min(j)..=i.max(j)].reverse(),
                _ => {
                    let v = cand.remove(i);
                    cand.insert(j, v);
                }
            }
            let c = model.order_cost(&cand, None);
            let delta = c - cost;
            if delta > 0.0 && rng.random::<f64>() >= (-delta / t).exp() {
                continue;
            }
            std::mem::swap(&mut cur, &mut cand);
            cost = c;
            if cost < best_cost {
                best_cost = cost;
                best.copy_from_slice(&cur);
            }
        }
    }
    (best, best_cost)
}
