//! Fubini-Study cost, its gradient and the quantum geometric metric.
//!
//! The cost of parameters `θ` is `√(1 − p₀(θ))` where
//! `p₀(θ) = |⟨0…0|V†U(θ)|0…0⟩|²` is the probability of reading all zeros after
//! running the ansatz and then the inverse target preparation. In exact mode
//! `p₀` is computed from amplitudes; in shot mode it is the empirical frequency
//! of outcome 0, optionally after readout noise and mitigation.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::initial_parameters;
use crate::circuits::Circuit;
use crate::error::{validation, Error, Result};
use crate::noise::{apply_readout_noise, mitigate, CalibrationMatrix, ReadoutNoiseModel};
use crate::rng::derive_seed;
use crate::statevector::{sample_counts, StateVector};
use crate::targets::TargetUnitary;

/// Lower bound on the cost in the chain-rule denominator `2·C`.
pub const COST_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EvaluationMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

impl EvaluationMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, EvaluationMode::Exact)
    }
}

/// How the derivative with respect to one parameter is obtained from shifted
/// evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ShiftRule {
    /// Generator with eigenvalues ±1/2: two evaluations at ±π/2.
    TwoTerm,
    /// Controlled rotation, generator eigenvalues {0, ±1/2}: four evaluations.
    FourTerm,
}

const FOUR_TERM_NEAR: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
const FOUR_TERM_FAR: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);

/// Everything needed to evaluate the cost for a parameter vector.
#[derive(Clone, Debug)]
pub struct CostContext {
    ansatz: Circuit,
    target: Arc<TargetUnitary>,
    mode: EvaluationMode,
    noise: Option<ReadoutNoiseModel>,
    mitigation: Option<Arc<CalibrationMatrix>>,
    rules: Vec<ShiftRule>,
}

impl CostContext {
    pub fn new(ansatz: Circuit, target: TargetUnitary, mode: EvaluationMode) -> Result<Self> {
        if ansatz.n_qubits() != target.n_qubits() {
            return Err(validation(format!(
                "ansatz acts on {} qubits but the target on {}",
                ansatz.n_qubits(),
                target.n_qubits()
            )));
        }
        if let EvaluationMode::Shots { shots: 0, .. } = mode {
            return Err(validation("shot mode needs a positive shot count"));
        }
        let mut rules = vec![ShiftRule::TwoTerm; ansatz.n_params()];
        for g in ansatz.gates() {
            if let Some(slot) = g.param_slot {
                if g.kind.is_controlled_rotation() {
                    rules[slot] = ShiftRule::FourTerm;
                }
            }
        }
        Ok(Self { ansatz, target: Arc::new(target), mode, noise: None, mitigation: None, rules })
    }

    /// Adds readout noise; shot mode only.
    pub fn with_noise(mut self, noise: ReadoutNoiseModel) -> Result<Self> {
        if self.mode.is_exact() {
            return Err(validation("readout noise requires shot mode"));
        }
        self.noise = Some(noise);
        Ok(self)
    }

    /// Adds calibration-matrix mitigation; shot mode only.
    pub fn with_mitigation(mut self, cal: Arc<CalibrationMatrix>) -> Result<Self> {
        if self.mode.is_exact() {
            return Err(validation("mitigation requires shot mode"));
        }
        if cal.n_qubits() != self.ansatz.n_qubits() {
            return Err(validation("calibration matrix size does not match the register"));
        }
        self.mitigation = Some(cal);
        Ok(self)
    }

    /// Same context with a different shot seed (no-op in exact mode).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut ctx = self.clone();
        if let EvaluationMode::Shots { shots, .. } = self.mode {
            ctx.mode = EvaluationMode::Shots { shots, seed };
        }
        ctx
    }

    /// Exact-mode copy with noise and mitigation removed.
    pub fn exact(&self) -> Self {
        let mut ctx = self.clone();
        ctx.mode = EvaluationMode::Exact;
        ctx.noise = None;
        ctx.mitigation = None;
        ctx
    }

    pub fn ansatz(&self) -> &Circuit {
        &self.ansatz
    }

    pub fn target(&self) -> &TargetUnitary {
        &self.target
    }

    pub fn mode(&self) -> EvaluationMode {
        self.mode
    }

    pub fn noise(&self) -> Option<&ReadoutNoiseModel> {
        self.noise.as_ref()
    }

    pub fn mitigation(&self) -> Option<&CalibrationMatrix> {
        self.mitigation.as_deref()
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    /// `p₀` at `theta`, using the shot stream `path` under the mode seed.
    fn p0_stream(&self, theta: &[f64], path: &[u64]) -> Result<f64> {
        let phi = self.ansatz.prepare(theta)?;
        let p0 = match self.mode {
            EvaluationMode::Exact => self.target.target().fidelity(&phi)?,
            EvaluationMode::Shots { shots, seed } => {
                let mut probs = self.target.apply_adjoint(&phi)?.probabilities();
                if let Some(noise) = &self.noise {
                    probs = apply_readout_noise(&probs, noise)?;
                }
                let mut freqs = sample_counts(&probs, shots, derive_seed(seed, path))?.frequencies();
                if let Some(cal) = &self.mitigation {
                    freqs = mitigate(cal, &freqs)?;
                }
                freqs.get(0)
            }
        };
        if !p0.is_finite() {
            return Err(Error::Numeric(format!("overlap probability is {p0}")));
        }
        Ok(p0.clamp(0.0, 1.0))
    }

    /// Probability of the all-zeros outcome after `V†U(θ)`, in `[0, 1]`.
    pub fn overlap_probability(&self, theta: &[f64]) -> Result<f64> {
        self.p0_stream(theta, &[0])
    }

    /// Fubini-Study distance `√(1 − p₀)`.
    pub fn cost(&self, theta: &[f64]) -> Result<f64> {
        Ok(cost_from_overlap(self.overlap_probability(theta)?))
    }

    fn shifted(&self, theta: &[f64], k: usize, shift: f64, tag: u64) -> Result<f64> {
        let mut t = theta.to_vec();
        t[k] += shift;
        self.p0_stream(&t, &[1, k as u64, tag])
    }

    /// `∂p₀/∂θ_k` by the parameter-shift rule.
    pub fn overlap_partial(&self, theta: &[f64], k: usize) -> Result<f64> {
        self.ansatz.check_theta(theta)?;
        if k >= self.n_params() {
            return Err(Error::Index(format!("parameter {k} out of range for {} parameters", self.n_params())));
        }
        match self.rules[k] {
            ShiftRule::TwoTerm => {
                Ok((self.shifted(theta, k, FRAC_PI_2, 0)? - self.shifted(theta, k, -FRAC_PI_2, 1)?) / 2.0)
            }
            ShiftRule::FourTerm => {
                let near = self.shifted(theta, k, FRAC_PI_2, 0)? - self.shifted(theta, k, -FRAC_PI_2, 1)?;
                let far = self.shifted(theta, k, 1.5 * PI, 2)? - self.shifted(theta, k, -1.5 * PI, 3)?;
                Ok(FOUR_TERM_NEAR * near - FOUR_TERM_FAR * far)
            }
        }
    }

    /// Gradient of `p₀`.
    pub fn overlap_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.ansatz.check_theta(theta)?;
        (0..self.n_params())
            .into_par_iter()
            .map(|k| self.overlap_partial(theta, k))
            .collect()
    }

    /// Gradient of the cost, given the cost already evaluated at `theta`.
    pub fn gradient_with_cost(&self, theta: &[f64], cost: f64) -> Result<Vec<f64>> {
        let scale = -1.0 / (2.0 * cost.max(COST_FLOOR));
        Ok(self.overlap_gradient(theta)?.into_iter().map(|g| g * scale).collect())
    }

    /// `∂C/∂θ_k = −(∂p₀/∂θ_k) / (2·max(C, 1e-6))`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let c = self.cost(theta)?;
        self.gradient_with_cost(theta, c)
    }

    /// `∂C/∂θ_k` for a single parameter.
    pub fn cost_partial(&self, theta: &[f64], k: usize) -> Result<f64> {
        let c = self.cost(theta)?;
        Ok(-self.overlap_partial(theta, k)? / (2.0 * c.max(COST_FLOOR)))
    }

    /// Metric tensor of the ansatz state; exact mode only.
    pub fn metric(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        if !self.mode.is_exact() {
            return Err(Error::UnsupportedMode("the metric tensor needs exact statevector access".into()));
        }
        fubini_study_metric(&self.ansatz, theta)
    }
}

pub fn cost_from_overlap(p0: f64) -> f64 {
    (1.0 - p0.clamp(0.0, 1.0)).sqrt()
}

/// `g_jk = Re[⟨∂_jφ|∂_kφ⟩ − ⟨∂_jφ|φ⟩⟨φ|∂_kφ⟩]` for `|φ⟩ = U(θ)|0…0⟩`.
///
/// State derivatives use `|∂_kφ⟩ = (|φ(θ+πe_k)⟩ − |φ(θ−πe_k)⟩)/4`, exact for
/// every rotation and controlled rotation in the gate set.
pub fn fubini_study_metric(ansatz: &Circuit, theta: &[f64]) -> Result<DMatrix<f64>> {
    ansatz.check_theta(theta)?;
    let m = ansatz.n_params();
    let phi = ansatz.prepare(theta)?;
    let derivs: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|k| -> Result<Vec<Complex64>> {
            let mut plus = theta.to_vec();
            plus[k] += PI;
            let mut minus = theta.to_vec();
            minus[k] -= PI;
            let a = ansatz.prepare(&plus)?;
            let b = ansatz.prepare(&minus)?;
            Ok(a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y) / 4.0).collect())
        })
        .collect::<Result<_>>()?;
    let berry: Vec<Complex64> = derivs.iter().map(|d| dot(phi.amplitudes(), d)).collect();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = (dot(&derivs[j], &derivs[k]) - berry[j].conj() * berry[k]).re;
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    Ok(g)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Exact-mode samples of `∂C/∂θ_k` over `n_samples` independent uniform
/// initializations; sample `s` draws its parameters from stream `(seed, s)`.
pub fn gradient_samples(
    ansatz: &Circuit,
    target: &TargetUnitary,
    param_index: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let ctx = CostContext::new(ansatz.clone(), target.clone(), EvaluationMode::Exact)?;
    if param_index >= ctx.n_params() {
        return Err(Error::Index(format!(
            "parameter {param_index} out of range for {} parameters",
            ctx.n_params()
        )));
    }
    (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let theta = initial_parameters(ctx.n_params(), derive_seed(seed, &[s as u64]));
            ctx.cost_partial(&theta, param_index)
        })
        .collect()
}

/// `⟨(∂_k C)²⟩ − ⟨∂_k C⟩²` over random initializations.
pub fn gradient_variance(
    ansatz: &Circuit,
    target: &TargetUnitary,
    param_index: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(validation("gradient variance needs at least two samples"));
    }
    let xs = gradient_samples(ansatz, target, param_index, n_samples, seed)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mean_sq = xs.iter().map(|x| x * x).sum::<f64>() / n;
    Ok((mean_sq - mean * mean).max(0.0))
}

/// Runs `U(θ)` then `V†` on `|0…0⟩` and returns the resulting state.
pub fn pipeline_state(ansatz: &Circuit, target: &TargetUnitary, theta: &[f64]) -> Result<StateVector> {
    target.apply_adjoint(&ansatz.prepare(theta)?)
}
