//! Readout noise and calibration-matrix mitigation.
//!
//! Each measured bit flips independently with probability `ε`. On the outcome
//! distribution this is the N-fold tensor power of `[[1-ε, ε], [ε, 1-ε]]`.
//! Mitigation estimates that matrix column by column from basis-state
//! preparations and applies its inverse to the noisy frequencies.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::rng::derive_seed;
use crate::statevector::{check_capacity, sample_counts, ProbabilityVector};

/// Mitigation refuses calibration matrices worse conditioned than this.
pub const MAX_CONDITION_NUMBER: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutNoiseModel {
    epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_qubit: Option<Vec<f64>>,
}

fn check_rate(eps: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eps) {
        return Err(validation(format!("readout error rate {eps} outside [0, 0.5)")));
    }
    Ok(())
}

impl ReadoutNoiseModel {
    pub fn uniform(epsilon: f64) -> Result<Self> {
        check_rate(epsilon)?;
        Ok(Self { epsilon, per_qubit: None })
    }

    /// Independent rates per qubit, qubit 0 first.
    pub fn per_qubit(rates: Vec<f64>) -> Result<Self> {
        for &r in &rates {
            check_rate(r)?;
        }
        let epsilon = rates.iter().copied().fold(0.0, f64::max);
        Ok(Self { epsilon, per_qubit: Some(rates) })
    }

    /// The uniform rate, or the largest per-qubit rate.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rate(&self, qubit: usize) -> f64 {
        match &self.per_qubit {
            Some(rates) => rates[qubit],
            None => self.epsilon,
        }
    }

    fn check_size(&self, n_qubits: usize) -> Result<()> {
        match &self.per_qubit {
            Some(r) if r.len() != n_qubits => Err(validation(format!(
                "noise model has {} rates for {n_qubits} qubits",
                r.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Pushes `probs` through the bit-flip channel, one qubit at a time.
pub fn apply_readout_noise(probs: &ProbabilityVector, model: &ReadoutNoiseModel) -> Result<ProbabilityVector> {
    let n = probs.n_qubits();
    model.check_size(n)?;
    let mut p = probs.probs().to_vec();
    for q in 0..n {
        let eps = model.rate(q);
        if eps == 0.0 {
            continue;
        }
        let mask = 1usize << (n - 1 - q);
        for i0 in (0..p.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a, b) = (p[i0], p[i1]);
            p[i0] = (1.0 - eps) * a + eps * b;
            p[i1] = eps * a + (1.0 - eps) * b;
        }
    }
    ProbabilityVector::from_raw(p)
}

/// Column-stochastic response matrix: column `j` is the observed outcome
/// distribution when basis state `j` is prepared.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    n_qubits: usize,
    matrix: DMatrix<f64>,
    #[serde(skip)]
    inverse: OnceLock<std::result::Result<(DMatrix<f64>, f64), String>>,
}

impl PartialEq for CalibrationMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits && self.matrix == other.matrix
    }
}

impl CalibrationMatrix {
    /// Validates shape, nonnegativity and unit column sums (within `1e-9`).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(validation(format!(
                "calibration matrix must be square with power-of-two size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_capacity(n_qubits)?;
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(validation("calibration matrix entries must be finite and nonnegative"));
        }
        for (j, col) in matrix.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(validation(format!("calibration column {j} sums to {s}")));
            }
        }
        Ok(Self { n_qubits, matrix, inverse: OnceLock::new() })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1 << n_qubits;
        Self::new(DMatrix::identity(dim, dim))
    }

    /// Exact channel matrix, `M[i][j] = ε^d (1-ε)^(N-d)` with `d` the Hamming
    /// distance between `i` and `j` (per-qubit rates multiply bitwise).
    pub fn analytic(n_qubits: usize, model: &ReadoutNoiseModel) -> Result<Self> {
        check_capacity(n_qubits)?;
        model.check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            (0..n_qubits)
                .map(|q| {
                    let mask = 1usize << (n_qubits - 1 - q);
                    let eps = model.rate(q);
                    if (i ^ j) & mask != 0 {
                        eps
                    } else {
                        1.0 - eps
                    }
                })
                .product()
        });
        Self::new(m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn inverse(&self) -> Result<&(DMatrix<f64>, f64)> {
        self.inverse
            .get_or_init(|| {
                let sv = self.matrix.clone().singular_values();
                let max = sv.max();
                let min = sv.min();
                let cond = if min > 0.0 { max / min } else { f64::INFINITY };
                if !(cond <= MAX_CONDITION_NUMBER) {
                    return Err(format!("calibration matrix condition number {cond:.3e} exceeds {MAX_CONDITION_NUMBER:e}"));
                }
                self.matrix
                    .clone()
                    .try_inverse()
                    .map(|inv| (inv, cond))
                    .ok_or_else(|| "calibration matrix is singular".to_string())
            })
            .as_ref()
            .map_err(|e| Error::Mitigation(e.clone()))
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        match self.inverse() {
            Ok((_, c)) => *c,
            Err(_) => {
                let sv = self.matrix.clone().singular_values();
                sv.max() / sv.min()
            }
        }
    }

    /// Row-major decimal text, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Parse { line: lineno + 1, msg: format!("bad number `{t}`: {e}") })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let dim = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(validation(format!("row {bad} has {} entries, expected {dim}", rows[bad].len())));
        }
        Self::new(DMatrix::from_row_iterator(dim, dim, rows.into_iter().flatten()))
    }
}

/// Samples each column from `shots` noisy measurements of the corresponding
/// basis state. Column `j` uses the stream `(seed, j)`.
pub fn build_calibration_matrix(
    n_qubits: usize,
    model: &ReadoutNoiseModel,
    shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    check_capacity(n_qubits)?;
    if shots == 0 {
        return Err(validation("calibration needs at least one shot per circuit"));
    }
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut onehot = vec![0.0; dim];
        onehot[j] = 1.0;
        let noisy = apply_readout_noise(&ProbabilityVector::new(onehot)?, model)?;
        let freqs = sample_counts(&noisy, shots, derive_seed(seed, &[j as u64]))?.frequencies();
        m.set_column(j, &DVector::from_column_slice(freqs.probs()));
    }
    // Frequencies are ratios of integers summing to `shots`; renormalize to
    // absorb rounding before validation.
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    CalibrationMatrix::new(m)
}

/// Solves `cal · x = noisy`, clips negative quasi-probabilities to zero and
/// renormalizes.
pub fn mitigate(cal: &CalibrationMatrix, noisy: &ProbabilityVector) -> Result<ProbabilityVector> {
    if noisy.n_qubits() != cal.n_qubits {
        return Err(validation(format!(
            "distribution over {} qubits, calibration over {}",
            noisy.n_qubits(),
            cal.n_qubits
        )));
    }
    let (inv, _) = cal.inverse()?;
    let x = inv * DVector::from_column_slice(noisy.probs());
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Mitigation(format!("mitigated distribution has total mass {total}")));
    }
    ProbabilityVector::from_raw(clipped.into_iter().map(|v| v / total).collect())
}
