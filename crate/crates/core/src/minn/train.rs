//! Training loop: AdamW on the network parameters, steepest-ascent updates
//! of the Lagrange multiplier, flatline stopping, and an append-only log.

use super::system::MinnSystem;
use super::{loss_minn, LossObjective, TrainingDataset};
use crate::error::CoreError;
use crate::neural::{forward_gradient, MlpParams};
use crate::solver::StepOptions;
use crate::Result;

/// Hyperparameters of one training run.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// Initial multiplier.
    pub lambda_init: f64,
    /// Ascent rate; `None` calibrates it at the first update so the first
    /// increment is a tenth of the initial multiplier.
    pub lambda_rate: Option<f64>,
    /// Epochs between multiplier updates.
    pub lambda_period: usize,
    pub max_epochs: usize,
    /// Flatline stop: relative change of the smoothed total loss over this
    /// many epochs.
    pub flatline_window: usize,
    pub flatline_tol: f64,
    pub seed: u64,
    /// Inner ODE tolerance pair for the loss rollouts.
    pub rtol: f64,
    pub atol: f64,
    /// Fixed inner step (used by the gradient-check suites).
    pub fixed_step: Option<f64>,
    /// Tangent lanes per gradient sweep.
    pub chunk: usize,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            lambda_init: 1.0,
            lambda_rate: None,
            lambda_period: 10,
            max_epochs: 500,
            flatline_window: 50,
            flatline_tol: 1e-4,
            seed: 0,
            rtol: 1e-4,
            atol: 1e-6,
            fixed_step: None,
            chunk: 8,
            hidden: vec![64, 64, 64],
            penalty: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            rtol: self.rtol,
            atol: self.atol,
            fixed_step: self.fixed_step,
            ..Default::default()
        }
    }

    pub fn layer_sizes(&self, n_in: usize, n_out: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(n_in);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(n_out);
        sizes
    }
}

/// One logged epoch.
#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_y: f64,
    pub l_g: f64,
    pub lambda: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Populated when the loop stopped for a reason other than flatline or
    /// the epoch limit.
    pub aborted: Option<String>,
}

/// Decoupled-weight-decay Adam.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl AdamW {
    pub fn new(dim: usize, lr: f64, beta1: f64, beta2: f64, epsilon: f64, weight_decay: f64) -> Self {
        AdamW { lr, beta1, beta2, epsilon, weight_decay, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            theta[i] -= self.lr * (mhat / (vhat.sqrt() + self.epsilon) + self.weight_decay * theta[i]);
        }
    }
}

/// Train the surrogate on measured outputs.
///
/// Per epoch: forward-mode gradient of the total loss, AdamW update; every
/// `lambda_period` epochs the multiplier rises by `rate * L_g` (steepest
/// ascent, never negative). Stops when the smoothed total loss flatlines or
/// at the epoch limit. Non-finite gradients roll the step back, halve the
/// learning rate and retry; repeated failures abort with the log attached.
pub fn train<Sys: MinnSystem>(
    sys: &Sys,
    data: &TrainingDataset,
    config: &TrainConfig,
) -> Result<(MlpParams, TrainLog)> {
    if data.times.is_empty() {
        return Err(CoreError::invalid("train: empty dataset"));
    }
    let started = std::time::Instant::now();
    let sizes = config.layer_sizes(sys.nn_input_dim(), sys.n_z());
    let mut params = MlpParams::init(sizes.clone(), config.seed)?;
    let mut opt = AdamW::new(
        params.theta.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
        config.weight_decay,
    );
    let opts = config.step_options();
    let mut lambda = config.lambda_init;
    let mut rate = config.lambda_rate;
    let mut log = TrainLog::default();
    let mut smoothed: Vec<f64> = Vec::new();
    let mut failures = 0usize;

    for epoch in 0..config.max_epochs {
        let objective = LossObjective {
            sys,
            layer_sizes: &sizes,
            lambda,
            data,
            opts: opts.clone(),
            penalty: config.penalty,
        };
        let grad = match forward_gradient(&objective, &params.theta, config.chunk) {
            Ok((_, g)) => {
                failures = 0;
                g
            }
            Err(CoreError::NonFiniteGradient { stage, chunk_start }) => {
                failures += 1;
                opt.lr *= 0.5;
                log::warn!(
                    "epoch {epoch}: non-finite gradient in {stage} (chunk {chunk_start}); \
                     halving learning rate to {:.3e}",
                    opt.lr
                );
                if failures >= 5 {
                    log.aborted = Some(format!(
                        "aborted at epoch {epoch}: {failures} consecutive non-finite gradients"
                    ));
                    return Err(CoreError::TrainingAborted(log.aborted.clone().unwrap()));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        opt.step(&mut params.theta, &grad);

        let (total, l_y, l_g) =
            loss_minn(sys, &sizes, &params.theta, lambda, data, &opts, config.penalty)?;
        log.epochs.push(EpochRecord {
            epoch,
            l_y,
            l_g,
            lambda,
            seconds: started.elapsed().as_secs_f64(),
        });

        // multiplier ascent
        if (epoch + 1) % config.lambda_period == 0 {
            let r = *rate.get_or_insert_with(|| {
                if l_g > 0.0 {
                    0.1 * config.lambda_init.max(1e-12) / l_g
                } else {
                    0.0
                }
            });
            lambda = (lambda + r * l_g).max(0.0);
        }

        // flatline detection on a lightly smoothed total loss
        let window = config.flatline_window;
        let smooth_n = 10.min(log.epochs.len());
        let recent: f64 = log
            .epochs
            .iter()
            .rev()
            .take(smooth_n)
            .map(|e| e.l_y + e.lambda * e.l_g)
            .sum::<f64>()
            / smooth_n as f64;
        smoothed.push(recent);
        let _ = total;
        if smoothed.len() > window {
            let past = smoothed[smoothed.len() - 1 - window];
            if (recent - past).abs() <= config.flatline_tol * past.abs().max(1e-300) {
                break;
            }
        }
    }
    Ok((params, log))
}
