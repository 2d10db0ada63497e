//! Dense state-vector simulator with the gate set QAOA needs.
//!
//! Amplitude index bit `q` is qubit `q`; see [`Bitstring`] for the text
//! ordering of measurement outcomes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::Bitstring;

/// Largest register accepted (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Probabilities below this are dropped from [`StateVector::probabilities`].
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("rotation angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("diagonal has {got} entries, expected {expected}")]
    DiagonalLength { got: usize, expected: usize },
    #[error("shot count must be at least 1")]
    NoShots,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_count(n: usize) -> Result<(), StateError> {
        if n == 0 || n > MAX_QUBITS {
            Err(StateError::QubitCount(n))
        } else {
            Ok(())
        }
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self, StateError> {
        Self::check_count(n)?;
        let dim = 1usize << n;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index % dim] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    /// Equal superposition over all `2^n` basis states.
    pub fn init_uniform(n: usize) -> Result<Self, StateError> {
        Self::check_count(n)?;
        let dim = 1usize << n;
        let a = (dim as f64).sqrt().recip();
        Ok(Self {
            n_qubits: n,
            amps: vec![Complex64::new(a, 0.0); dim],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.n_qubits {
            Err(StateError::QubitIndex {
                index: q,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    pub fn apply_h(&mut self, q: usize) -> Result<(), StateError> {
        self.check_qubit(q)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(q, [[h, h], [h, -h]]);
        Ok(())
    }

    /// `RX(theta) = exp(-i theta X / 2)`.
    pub fn apply_rx(&mut self, q: usize, theta: f64) -> Result<(), StateError> {
        self.check_qubit(q)?;
        if !theta.is_finite() {
            return Err(StateError::NonFiniteAngle(theta));
        }
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(theta / 2.0).sin());
        self.apply_single(q, [[c, s], [s, c]]);
        Ok(())
    }

    /// `RX(theta)` on every qubit. Low qubits are processed block by block
    /// so each block stays in cache; high qubits go two per pass.
    pub fn apply_rx_all(&mut self, theta: f64) -> Result<(), StateError> {
        if !theta.is_finite() {
            return Err(StateError::NonFiniteAngle(theta));
        }
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let low = self.n_qubits.min(RX_BLOCK_QUBITS);
        for block in self.amps.chunks_exact_mut(1 << low) {
            for q in 0..low {
                rx_pass(block, q, c, s);
            }
        }
        let mut q = low;
        while q + 1 < self.n_qubits {
            rx_pair_pass(&mut self.amps, q, c, s);
            q += 2;
        }
        if q < self.n_qubits {
            rx_pass(&mut self.amps, q, c, s);
        }
        Ok(())
    }

    /// `RZ(theta) = diag(e^{-i theta/2}, e^{+i theta/2})`.
    pub fn apply_rz(&mut self, q: usize, theta: f64) -> Result<(), StateError> {
        self.check_qubit(q)?;
        if !theta.is_finite() {
            return Err(StateError::NonFiniteAngle(theta));
        }
        let zero = Complex64::new(0.0, 0.0);
        let p0 = Complex64::cis(-theta / 2.0);
        let p1 = Complex64::cis(theta / 2.0);
        self.apply_single(q, [[p0, zero], [zero, p1]]);
        Ok(())
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), StateError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(StateError::SameQubit(control));
        }
        let (cbit, tbit) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// Multiplies amplitude `z` by `exp(-i * angle * diagonal[z])`.
    ///
    /// This is the action of any Hamiltonian that is diagonal in the
    /// computational basis, e.g. a product of ZZ rotations.
    pub fn apply_diagonal_phase(&mut self, diagonal: &[f64], angle: f64) -> Result<(), StateError> {
        if diagonal.len() != self.amps.len() {
            return Err(StateError::DiagonalLength {
                got: diagonal.len(),
                expected: self.amps.len(),
            });
        }
        if !angle.is_finite() {
            return Err(StateError::NonFiniteAngle(angle));
        }
        for (a, &d) in self.amps.iter_mut().zip(diagonal) {
            *a *= Complex64::cis(-angle * d);
        }
        Ok(())
    }

    /// `|amplitude|^2` for every basis index, unpruned.
    pub fn probability_vector(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution with entries below [`PRUNE_THRESHOLD`] removed.
    pub fn probabilities(&self) -> BTreeMap<Bitstring, f64> {
        self.amps
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let p = a.norm_sqr();
                (p >= PRUNE_THRESHOLD).then(|| (Bitstring::from_index(self.n_qubits, i), p))
            })
            .collect()
    }

    /// Expectation of a diagonal observable given per-basis-state values.
    pub fn expectation_diagonal(&self, diagonal: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(diagonal)
            .map(|(a, &d)| a.norm_sqr() * d)
            .sum()
    }

    /// Draws `shots` i.i.d. outcomes; the same seed gives the same draws.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<Vec<Bitstring>, StateError> {
        if shots == 0 {
            return Err(StateError::NoShots);
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..shots)
            .map(|_| {
                let r = rng.random::<f64>() * total;
                let idx = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
                Bitstring::from_index(self.n_qubits, idx)
            })
            .collect())
    }

    /// Equality up to a global phase, amplitude-wise within `tol`.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if self.n_qubits != other.n_qubits {
            return false;
        }
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        if overlap.norm() < f64::EPSILON {
            return self.amps.iter().chain(&other.amps).all(|a| a.norm() <= tol);
        }
        let phase = overlap / overlap.norm();
        self.amps
            .iter()
            .zip(&other.amps)
            .all(|(a, b)| (a * phase - b).norm() <= tol)
    }
}

/// Counts draws per outcome.
pub fn histogram(draws: &[Bitstring]) -> BTreeMap<Bitstring, usize> {
    let mut counts = BTreeMap::new();
    for d in draws {
        *counts.entry(d.clone()).or_insert(0) += 1;
    }
    counts
}

/// Qubits handled inside one cache-resident block by `apply_rx_all`.
const RX_BLOCK_QUBITS: usize = 14;

/// `(a, b) -> (c a - i s b, -i s a + c b)`.
#[inline(always)]
fn rx_pair(a: Complex64, b: Complex64, c: f64, s: f64) -> (Complex64, Complex64) {
    (
        Complex64::new(c * a.re + s * b.im, c * a.im - s * b.re),
        Complex64::new(c * b.re + s * a.im, c * b.im - s * a.re),
    )
}

fn rx_pass(amps: &mut [Complex64], q: usize, c: f64, s: f64) {
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            (*a0, *a1) = rx_pair(*a0, *a1, c, s);
        }
    }
}

/// RX on qubits `q` and `q + 1` in one sweep.
fn rx_pair_pass(amps: &mut [Complex64], q: usize, c: f64, s: f64) {
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(4 * stride) {
        let (lo, hi) = block.split_at_mut(2 * stride);
        let (x00, x01) = lo.split_at_mut(stride);
        let (x10, x11) = hi.split_at_mut(stride);
        for k in 0..stride {
            let (a, b) = rx_pair(x00[k], x01[k], c, s);
            let (d, e) = rx_pair(x10[k], x11[k], c, s);
            (x00[k], x10[k]) = rx_pair(a, d, c, s);
            (x01[k], x11[k]) = rx_pair(b, e, c, s);
        }
    }
}
