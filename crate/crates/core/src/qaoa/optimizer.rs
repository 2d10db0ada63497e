//! Derivative-free minimizers for the variational angles.

use std::sync::Arc;

use crate::registry::Registry;

/// Outcome of a bounded minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Objective value of every evaluation, in call order.
    pub history: Vec<f64>,
}

/// A box-constrained, derivative-free minimizer.
///
/// Implementations must evaluate `x0` first and never call the objective
/// more than `max_evals` times. The returned point is the best evaluated one.
pub trait ParamOptimizer: Send + Sync {
    fn name(&self) -> &str;

    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        x0: &[f64],
        bounds: &[(f64, f64)],
        max_evals: usize,
    ) -> OptimResult;
}

pub type OptimizerRegistry = Registry<dyn ParamOptimizer>;

/// Registry with `cobyla` and `nelder-mead`.
pub fn optimizer_registry() -> OptimizerRegistry {
    let mut reg = OptimizerRegistry::new();
    reg.register("cobyla", Arc::new(Cobyla::default()));
    reg.register("nelder-mead", Arc::new(NelderMead::default()));
    reg
}

fn clip(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Budgeted objective wrapper that records the incumbent.
struct Tracker<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    max_evals: usize,
    history: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<'a> Tracker<'a> {
    fn new(f: &'a mut dyn FnMut(&[f64]) -> f64, max_evals: usize) -> Self {
        Self {
            f,
            max_evals,
            history: Vec::new(),
            best_x: Vec::new(),
            best_f: f64::INFINITY,
        }
    }

    fn exhausted(&self) -> bool {
        self.history.len() >= self.max_evals
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        let v = (self.f)(x);
        self.history.push(v);
        if v < self.best_f || self.best_x.is_empty() {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        Some(v)
    }

    fn finish(self) -> OptimResult {
        OptimResult {
            evaluations: self.history.len(),
            x: self.best_x,
            value: self.best_f,
            history: self.history,
        }
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Linear-approximation trust-region method in the spirit of COBYLA,
/// specialised to box bounds.
///
/// A simplex of `n + 1` points defines a linear model of the objective; each
/// iteration steps a distance `rho` downhill from the best vertex. Vertices
/// drifting further than `2 rho` from the best point are pulled back before
/// the model is trusted, and `rho` halves whenever a step gains less than a
/// tenth of the predicted decrease on a well-shaped simplex.
#[derive(Debug, Clone)]
pub struct Cobyla {
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for Cobyla {
    fn default() -> Self {
        Self {
            rho_begin: 1.0,
            rho_end: 1e-4,
        }
    }
}

impl Cobyla {
    /// Vertex at distance `rho` from `base` along axis `k`, flipped inward
    /// if the forward point falls outside the box.
    fn axis_point(base: &[f64], k: usize, rho: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
        let mut p = base.to_vec();
        let (lo, hi) = bounds[k];
        p[k] = if base[k] + rho <= hi { base[k] + rho } else { (base[k] - rho).max(lo) };
        p
    }

    fn build_simplex(
        base: &[f64],
        f_base: f64,
        rho: f64,
        bounds: &[(f64, f64)],
        tracker: &mut Tracker<'_>,
    ) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut sim = vec![base.to_vec()];
        let mut fv = vec![f_base];
        for k in 0..base.len() {
            let p = Self::axis_point(base, k, rho, bounds);
            fv.push(tracker.eval(&p)?);
            sim.push(p);
        }
        Some((sim, fv))
    }
}

impl ParamOptimizer for Cobyla {
    fn name(&self) -> &str {
        "cobyla"
    }

    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        x0: &[f64],
        bounds: &[(f64, f64)],
        max_evals: usize,
    ) -> OptimResult {
        let n = x0.len();
        let mut tracker = Tracker::new(objective, max_evals);
        let mut start = x0.to_vec();
        clip(&mut start, bounds);
        let Some(f0) = tracker.eval(&start) else {
            return tracker.finish();
        };
        let mut rho = self.rho_begin;
        let Some((mut sim, mut fv)) = Self::build_simplex(&start, f0, rho, bounds, &mut tracker) else {
            return tracker.finish();
        };

        while !tracker.exhausted() && rho >= self.rho_end {
            let best = (0..=n).min_by(|&i, &j| fv[i].total_cmp(&fv[j])).unwrap();
            let xb = sim[best].clone();

            // pull back the vertex furthest from the incumbent if it is stale
            let (far, far_d) = (0..=n)
                .filter(|&k| k != best)
                .map(|k| (k, dist(&sim[k], &xb)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if far_d > 2.0 * rho {
                let mut p: Vec<f64> = sim[far]
                    .iter()
                    .zip(&xb)
                    .map(|(v, b)| b + rho * (v - b) / far_d)
                    .collect();
                clip(&mut p, bounds);
                let Some(fp) = tracker.eval(&p) else { break };
                sim[far] = p;
                fv[far] = fp;
                continue;
            }

            let rows: Vec<Vec<f64>> = (0..=n)
                .filter(|&k| k != best)
                .map(|k| sim[k].iter().zip(&xb).map(|(a, b)| a - b).collect())
                .collect();
            let rhs: Vec<f64> = (0..=n).filter(|&k| k != best).map(|k| fv[k] - fv[best]).collect();
            let Some(grad) = solve_linear(rows, rhs) else {
                match Self::build_simplex(&xb, fv[best], rho, bounds, &mut tracker) {
                    Some((s, f)) => {
                        sim = s;
                        fv = f;
                        continue;
                    }
                    None => break,
                }
            };
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm <= f64::EPSILON {
                rho *= 0.5;
                continue;
            }
            let mut trial: Vec<f64> = xb.iter().zip(&grad).map(|(x, g)| x - rho * g / gnorm).collect();
            clip(&mut trial, bounds);
            let predicted: f64 = grad.iter().zip(xb.iter().zip(&trial)).map(|(g, (b, t))| g * (b - t)).sum();
            if predicted <= 0.0 || dist(&trial, &xb) < 1e-12 {
                rho *= 0.5;
                continue;
            }
            let Some(ft) = tracker.eval(&trial) else { break };
            let ratio = (fv[best] - ft) / predicted;

            let worst = (0..=n)
                .filter(|&k| k != best)
                .max_by(|&i, &j| fv[i].total_cmp(&fv[j]))
                .unwrap();
            if ft < fv[worst] {
                sim[worst] = trial;
                fv[worst] = ft;
            }
            let compact = (0..=n).all(|k| dist(&sim[k], &xb) <= 2.0 * rho);
            if ratio < 0.1 && compact {
                rho *= 0.5;
            }
        }
        tracker.finish()
    }
}

/// Nelder-Mead downhill simplex with bound clipping.
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub initial_step: f64,
    pub tolerance: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            tolerance: 1e-8,
        }
    }
}

impl ParamOptimizer for NelderMead {
    fn name(&self) -> &str {
        "nelder-mead"
    }

    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        x0: &[f64],
        bounds: &[(f64, f64)],
        max_evals: usize,
    ) -> OptimResult {
        let n = x0.len();
        let mut tracker = Tracker::new(objective, max_evals);
        let mut start = x0.to_vec();
        clip(&mut start, bounds);
        let Some(f0) = tracker.eval(&start) else {
            return tracker.finish();
        };
        let mut sim = vec![start.clone()];
        let mut fv = vec![f0];
        for k in 0..n {
            let p = Cobyla::axis_point(&start, k, self.initial_step, bounds);
            let Some(f) = tracker.eval(&p) else {
                return tracker.finish();
            };
            sim.push(p);
            fv.push(f);
        }

        let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect();
            clip(&mut p, bounds);
            p
        };

        'outer: while !tracker.exhausted() {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]));
            sim = order.iter().map(|&i| sim[i].clone()).collect();
            fv = order.iter().map(|&i| fv[i]).collect();
            if (fv[n] - fv[0]).abs() <= self.tolerance {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|d| sim[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
                .collect();

            let xr = point(&centroid, &sim[n], -1.0);
            let Some(fr) = tracker.eval(&xr) else { break };
            if fr < fv[0] {
                let xe = point(&centroid, &sim[n], -2.0);
                let Some(fe) = tracker.eval(&xe) else { break };
                if fe < fr {
                    sim[n] = xe;
                    fv[n] = fe;
                } else {
                    sim[n] = xr;
                    fv[n] = fr;
                }
            } else if fr < fv[n - 1] {
                sim[n] = xr;
                fv[n] = fr;
            } else {
                let (xc, fc) = if fr < fv[n] {
                    let xc = point(&centroid, &xr, 0.5);
                    let Some(fc) = tracker.eval(&xc) else { break };
                    (xc, fc)
                } else {
                    let xc = point(&centroid, &sim[n], 0.5);
                    let Some(fc) = tracker.eval(&xc) else { break };
                    (xc, fc)
                };
                if fc < fv[n].min(fr) {
                    sim[n] = xc;
                    fv[n] = fc;
                } else {
                    for k in 1..=n {
                        sim[k] = point(&sim[0], &sim[k], 0.5);
                        let Some(f) = tracker.eval(&sim[k]) else { break 'outer };
                        fv[k] = f;
                    }
                }
            }
        }
        tracker.finish()
    }
}
