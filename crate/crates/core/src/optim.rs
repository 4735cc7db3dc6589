//! Adam and quantum natural gradient training loops.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::initial_parameters;
use crate::cost::CostContext;
use crate::error::{validation, Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(validation("Adam learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(validation("Adam moment decays must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// First and second moment estimates carried between Adam steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u32,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(cfg: &AdamConfig, state: &AdamState, theta: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    if theta.len() != grad.len() || state.m.len() != theta.len() || state.v.len() != theta.len() {
        return Err(validation("Adam state, parameters and gradient differ in length"));
    }
    let t = state.t + 1;
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    let mut next = AdamState { m: state.m.clone(), v: state.v.clone(), t };
    let mut out = theta.to_vec();
    for i in 0..theta.len() {
        next.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        next.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = next.m[i] / bc1;
        let v_hat = next.v[i] / bc2;
        out[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok((next, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QngConfig {
    pub learning_rate: f64,
    /// Tikhonov shift `λ` added to the metric before solving.
    pub regularization: f64,
}

impl Default for QngConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, regularization: 1e-3 }
    }
}

impl QngConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(validation("QNG learning rate must be positive"));
        }
        if !(self.regularization > 0.0) {
            return Err(validation("QNG regularization must be positive"));
        }
        Ok(())
    }
}

/// `θ − lr · (G + λI)⁻¹ ∇C`, solved by Cholesky factorization.
pub fn qng_step(cfg: &QngConfig, theta: &[f64], grad: &[f64], metric: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = theta.len();
    if grad.len() != m || metric.nrows() != m || metric.ncols() != m {
        return Err(validation("metric, parameters and gradient differ in size"));
    }
    let a = metric + DMatrix::identity(m, m) * cfg.regularization;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numeric("regularized metric is not positive definite".into()))?;
    let step = chol.solve(&DVector::from_column_slice(grad));
    if step.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("natural gradient step is not finite".into()));
    }
    Ok(theta.iter().zip(step.iter()).map(|(t, s)| t - cfg.learning_rate * s).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Optimizer {
    Adam(AdamConfig),
    Qng(QngConfig),
}

impl Optimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Adam(_) => "adam",
            Optimizer::Qng(_) => "qng",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Optimizer::Adam(c) => c.validate(),
            Optimizer::Qng(c) => c.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub iterations: usize,
    /// Seed for the initial parameters.
    pub seed: u64,
    /// Stop once the recorded cost drops below this value.
    pub convergence_threshold: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { iterations: 100, seed: 0, convergence_threshold: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Optimizer that actually ran (QNG in shot mode runs Adam).
    pub optimizer: String,
    pub initial_cost: f64,
    /// Cost after each update.
    pub cost_history: Vec<f64>,
    pub theta_initial: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub iterations_run: usize,
    pub wall_time_s: f64,
    /// Set when a numeric failure ended training early.
    pub error: Option<String>,
}

impl TrainingTrace {
    pub fn final_cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(self.initial_cost)
    }
}

enum Stepper {
    Adam(AdamConfig, AdamState),
    Qng(QngConfig),
}

/// Trains from a uniform random start on `[0, 2π)^M`.
///
/// Iteration `i` evaluates in shot mode under the seed `(mode seed, i)`. A
/// numeric failure stops the loop and is reported in the trace alongside the
/// iterations completed so far.
pub fn train(ctx: &CostContext, optimizer: &Optimizer, opts: &TrainOptions) -> Result<TrainingTrace> {
    optimizer.validate()?;
    let start = Instant::now();
    let m = ctx.n_params();
    let theta0 = initial_parameters(m, opts.seed);
    let base_seed = match ctx.mode() {
        crate::cost::EvaluationMode::Shots { seed, .. } => seed,
        crate::cost::EvaluationMode::Exact => 0,
    };
    let iter_ctx = |i: u64| ctx.with_seed(derive_seed(base_seed, &[i]));

    let mut stepper = match optimizer {
        Optimizer::Adam(cfg) => Stepper::Adam(*cfg, AdamState::new(m)),
        Optimizer::Qng(cfg) if ctx.mode().is_exact() => Stepper::Qng(*cfg),
        Optimizer::Qng(cfg) => {
            log::warn!("QNG needs exact statevector access for the metric; falling back to Adam in shot mode");
            let adam = AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() };
            Stepper::Adam(adam, AdamState::new(m))
        }
    };
    let optimizer_used = match stepper {
        Stepper::Adam(..) => "adam",
        Stepper::Qng(_) => "qng",
    };

    let initial_cost = iter_ctx(0).cost(&theta0)?;
    let mut trace = TrainingTrace {
        optimizer: optimizer_used.to_string(),
        initial_cost,
        cost_history: Vec::with_capacity(opts.iterations),
        theta_initial: theta0.clone(),
        theta_final: theta0.clone(),
        iterations_run: 0,
        wall_time_s: 0.0,
        error: None,
    };

    let mut theta = theta0;
    let mut cost = initial_cost;
    for i in 0..opts.iterations {
        let step_ctx = iter_ctx(i as u64 + 1);
        let result = (|| -> Result<(Vec<f64>, f64)> {
            let grad = step_ctx.gradient_with_cost(&theta, cost)?;
            let next = match &mut stepper {
                Stepper::Adam(cfg, state) => {
                    let (s, t) = adam_step(cfg, state, &theta, &grad)?;
                    *state = s;
                    t
                }
                Stepper::Qng(cfg) => qng_step(cfg, &theta, &grad, &step_ctx.metric(&theta)?)?,
            };
            if next.iter().any(|t| !t.is_finite()) {
                return Err(Error::Numeric("parameters became non-finite".into()));
            }
            let c = step_ctx.cost(&next)?;
            Ok((next, c))
        })();
        match result {
            Ok((next, c)) => {
                theta = next;
                cost = c;
                trace.cost_history.push(c);
                trace.iterations_run += 1;
            }
            Err(e) => {
                trace.error = Some(e.to_string());
                break;
            }
        }
        if opts.convergence_threshold.is_some_and(|thr| cost < thr) {
            break;
        }
    }
    trace.theta_final = theta;
    trace.wall_time_s = start.elapsed().as_secs_f64();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_ansatz, AnsatzConfig, AnsatzKind};
    use crate::cost::EvaluationMode;
    use crate::targets::{completed_unitary, ghz_state};
    use nalgebra::SymmetricEigen;

    #[test]
    fn adam_zero_gradient_is_stationary() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(3);
        let mut theta = vec![0.3, -1.0, 2.0];
        for _ in 0..10 {
            let (s, t) = adam_step(&cfg, &state, &theta, &[0.0; 3]).unwrap();
            state = s;
            theta = t;
        }
        assert_eq!(theta, vec![0.3, -1.0, 2.0]);
    }

    #[test]
    fn adam_first_step_has_learning_rate_size() {
        // At t = 1, m̂ = c and v̂ = c², so the step is lr·c/(|c| + ε).
        let cfg = AdamConfig::default();
        for c in [0.01, 3.0, -7.5] {
            let (_, t) = adam_step(&cfg, &AdamState::new(1), &[1.0], &[c]).unwrap();
            let expected = 1.0 - 0.1 * c / (c.abs() + 1e-8);
            assert!((t[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_moments_decay() {
        let cfg = AdamConfig::default();
        let (mut state, _) = adam_step(&cfg, &AdamState::new(1), &[0.0], &[1.0]).unwrap();
        let (m0, v0) = (state.m[0], state.v[0]);
        for _ in 0..50 {
            state = adam_step(&cfg, &state, &[0.0], &[0.0]).unwrap().0;
        }
        assert!(state.m[0] < m0 * 0.01);
        assert!(state.v[0] < v0);
        assert!(state.m[0] > 0.0);
    }

    #[test]
    fn qng_examples() {
        let cfg = QngConfig { learning_rate: 0.5, regularization: 1e-12 };
        let g = [0.3, -0.2];
        let out = qng_step(&cfg, &[1.0, 1.0], &g, &DMatrix::identity(2, 2)).unwrap();
        assert!((out[0] - (1.0 - 0.5 * 0.3)).abs() < 1e-10);
        assert!((out[1] - (1.0 + 0.5 * 0.2)).abs() < 1e-10);

        let cfg = QngConfig { learning_rate: 1.0, regularization: 0.0 };
        let metric = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let out = qng_step(&cfg, &[0.0, 0.0], &[1.0, 1.0], &metric).unwrap();
        assert!((out[0] + 0.25).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);

        let singular = DMatrix::zeros(2, 2);
        assert!(matches!(qng_step(&cfg, &[0.0, 0.0], &[1.0, 1.0], &singular), Err(Error::Numeric(_))));
    }

    #[test]
    fn qng_step_norm_is_bounded_by_regularization() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(11);
        for _ in 0..50 {
            let m = 6;
            let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
            let psd = &b * b.transpose();
            assert!(SymmetricEigen::new(psd.clone()).eigenvalues.min() > -1e-12);
            let grad: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let cfg = QngConfig { learning_rate: 0.3, regularization: 0.05 };
            let out = qng_step(&cfg, &vec![0.0; m], &grad, &psd).unwrap();
            let step = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = cfg.learning_rate * grad.iter().map(|v| v * v).sum::<f64>().sqrt() / cfg.regularization;
            assert!(step <= bound + 1e-12);
        }
    }

    fn ghz_ctx(layers: usize, mode: EvaluationMode) -> CostContext {
        let ansatz = build_ansatz(&AnsatzConfig::new(AnsatzKind::G2, 3, layers).unwrap()).unwrap();
        CostContext::new(ansatz, completed_unitary(&ghz_state(3).unwrap()).unwrap(), mode).unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        let ctx = ghz_ctx(1, EvaluationMode::Exact);
        let opts = TrainOptions { iterations: 15, seed: 4, convergence_threshold: None };
        for opt in [Optimizer::Adam(AdamConfig::default()), Optimizer::Qng(QngConfig::default())] {
            let a = train(&ctx, &opt, &opts).unwrap();
            let b = train(&ctx, &opt, &opts).unwrap();
            assert_eq!(a.cost_history, b.cost_history);
            assert_eq!(a.theta_final, b.theta_final);
            assert_eq!(a.iterations_run, 15);
            assert!(a.cost_history.iter().all(|c| (0.0..=1.0).contains(c)));
        }

        let shots = ghz_ctx(1, EvaluationMode::Shots { shots: 1000, seed: 3 });
        let a = train(&shots, &Optimizer::Adam(AdamConfig::default()), &opts).unwrap();
        let b = train(&shots, &Optimizer::Adam(AdamConfig::default()), &opts).unwrap();
        assert_eq!(a.cost_history, b.cost_history);
    }

    #[test]
    fn qng_in_shot_mode_runs_adam() {
        let shots = ghz_ctx(1, EvaluationMode::Shots { shots: 500, seed: 3 });
        let opts = TrainOptions { iterations: 3, ..TrainOptions::default() };
        let t = train(&shots, &Optimizer::Qng(QngConfig::default()), &opts).unwrap();
        assert_eq!(t.optimizer, "adam");
        assert_eq!(t.cost_history.len(), 3);
    }

    #[test]
    fn convergence_threshold_stops_early() {
        let ctx = ghz_ctx(2, EvaluationMode::Exact);
        let opts = TrainOptions { iterations: 100, seed: 1, convergence_threshold: Some(0.9) };
        let t = train(&ctx, &Optimizer::Adam(AdamConfig::default()), &opts).unwrap();
        assert!(t.iterations_run < 100);
        assert_eq!(t.cost_history.len(), t.iterations_run);
    }

    #[test]
    fn invalid_optimizer_config_is_rejected() {
        let ctx = ghz_ctx(1, EvaluationMode::Exact);
        let bad = Optimizer::Qng(QngConfig { learning_rate: 0.1, regularization: 0.0 });
        assert!(train(&ctx, &bad, &TrainOptions::default()).is_err());
        let bad = Optimizer::Adam(AdamConfig { beta1: 1.0, ..AdamConfig::default() });
        assert!(train(&ctx, &bad, &TrainOptions::default()).is_err());
    }
}
