//! Dense statevector simulation.
//!
//! Basis index convention: qubit 0 is the most significant bit, so on three
//! qubits `|100⟩` has index 4 and `|001⟩` has index 1. Target states,
//! calibration matrices and shot counts all use the same ordering.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::rng::rng_from_seed;

/// Largest register the dense simulator will allocate.
pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// 2×2 matrix of `exp(-i·angle/2·σ_axis)`, row-major.
pub fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ],
    }
}

fn hadamard_matrix() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Pure state of an `n_qubits` register as `2^n_qubits` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps an amplitude vector. The length must be a power of two and the
    /// squared norm must be 1 within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amplitudes.len())?;
        let state = Self { n_qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(validation(format!("state is not normalized (squared norm {norm})")));
        }
        Ok(state)
    }

    /// Wraps and rescales an amplitude vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(validation("cannot normalize a zero or non-finite vector"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!("qubit {qubit} out of range for {} qubits", self.n_qubits)));
        }
        Ok(1usize << (self.n_qubits - 1 - qubit))
    }

    /// Applies a 2×2 matrix to `target` on the subspace where every bit of
    /// `control_mask` is set.
    fn apply_matrix(&mut self, target_mask: usize, control_mask: usize, m: &[[Complex64; 2]; 2]) {
        for i0 in 0..self.amplitudes.len() {
            if i0 & target_mask != 0 || i0 & control_mask != control_mask {
                continue;
            }
            let i1 = i0 | target_mask;
            let a0 = self.amplitudes[i0];
            let a1 = self.amplitudes[i1];
            self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `exp(-i·angle/2·σ_axis)` on `qubit`.
    pub fn apply_rotation(&mut self, axis: Axis, angle: f64, qubit: usize) -> Result<()> {
        if !angle.is_finite() {
            return Err(validation(format!("rotation angle must be finite, got {angle}")));
        }
        let mask = self.mask(qubit)?;
        self.apply_matrix(mask, 0, &rotation_matrix(axis, angle));
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        let mask = self.mask(qubit)?;
        self.apply_matrix(mask, 0, &hadamard_matrix());
        Ok(())
    }

    /// Negates every amplitude whose basis index has all `qubits` set.
    pub fn apply_multi_controlled_z(&mut self, qubits: &[usize]) -> Result<()> {
        if qubits.len() < 2 {
            return Err(Error::Index(format!("multi-controlled Z needs at least 2 qubits, got {}", qubits.len())));
        }
        let mask = self.distinct_mask(qubits)?;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Rotation about `axis` on `target`, conditioned on `control` being 1.
    pub fn apply_controlled_rotation(&mut self, control: usize, target: usize, axis: Axis, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(validation(format!("rotation angle must be finite, got {angle}")));
        }
        if control == target {
            return Err(Error::Index(format!("control and target coincide (qubit {control})")));
        }
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        self.apply_matrix(tmask, cmask, &rotation_matrix(axis, angle));
        Ok(())
    }

    fn distinct_mask(&self, qubits: &[usize]) -> Result<usize> {
        let mut mask = 0usize;
        for &q in qubits {
            let bit = self.mask(q)?;
            if mask & bit != 0 {
                return Err(Error::Index(format!("duplicate qubit {q}")));
            }
            mask |= bit;
        }
        Ok(mask)
    }

    pub fn probabilities(&self) -> ProbabilityVector {
        ProbabilityVector {
            n_qubits: self.n_qubits,
            probs: self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(validation(format!(
                "dimension mismatch: {} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }
}

pub(crate) fn check_capacity(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "register size {n_qubits} outside supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(validation(format!("amplitude count {len} is not a power of two ≥ 2")));
    }
    let n = len.trailing_zeros() as usize;
    check_capacity(n)?;
    Ok(n)
}

/// Outcome distribution over `2^n_qubits` basis states.
///
/// Exact distributions are nonnegative and sum to one. Noisy or mitigated
/// intermediates built with [`ProbabilityVector::from_raw`] may temporarily
/// violate nonnegativity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Validated constructor: entries ≥ 0 and sum 1 within `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let pv = Self::from_raw(probs)?;
        pv.validate()?;
        Ok(pv)
    }

    /// Shape-checked constructor without simplex validation.
    pub fn from_raw(probs: Vec<f64>) -> Result<Self> {
        let n_qubits = qubits_for_len(probs.len())?;
        Ok(Self { n_qubits, probs })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, p)) = self.probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < -1e-12) {
            return Err(validation(format!("probability at index {i} is invalid ({p})")));
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(validation(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Histogram of measurement outcomes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    n_qubits: usize,
    counts: BTreeMap<usize, u64>,
    total_shots: u64,
}

impl ShotCounts {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    /// Nonzero counts keyed by basis index.
    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Empirical frequencies; sums to one exactly up to rounding.
    pub fn frequencies(&self) -> ProbabilityVector {
        let mut probs = vec![0.0; 1 << self.n_qubits];
        let total = self.total_shots as f64;
        for (&i, &c) in &self.counts {
            probs[i] = c as f64 / total;
        }
        ProbabilityVector { n_qubits: self.n_qubits, probs }
    }
}

/// Multinomial sample of `shots` outcomes, seeded.
pub fn sample_counts(probs: &ProbabilityVector, shots: u64, seed: u64) -> Result<ShotCounts> {
    let mut rng = rng_from_seed(seed);
    sample_counts_with(probs, shots, &mut rng)
}

/// Multinomial sample drawn from a caller-owned generator, using the
/// conditional-binomial decomposition over basis indices in order.
pub fn sample_counts_with<R: Rng + ?Sized>(probs: &ProbabilityVector, shots: u64, rng: &mut R) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(validation("shot count must be positive"));
    }
    probs.validate()?;
    let mut counts = BTreeMap::new();
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    let last = probs.probs.len() - 1;
    for (i, &p) in probs.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        let k = if i == last || p >= mass_left {
            remaining
        } else if p == 0.0 {
            0
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::Numeric(format!("binomial sampling failed: {e}")))?
                .sample(rng)
        };
        if k > 0 {
            counts.insert(i, k);
        }
        remaining -= k;
        mass_left -= p;
    }
    Ok(ShotCounts { n_qubits: probs.n_qubits, counts, total_shots: shots })
}
