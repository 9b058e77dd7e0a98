//! The surrogate model proper: closed-loop simulation with the network
//! supplying the algebraic variables, the physics-constrained loss, and the
//! training loop with multiplier ascent.

pub mod closed_loop;
pub mod system;
pub mod train;

pub use closed_loop::BatterySystem;
pub use system::MinnSystem;
pub use train::{train, AdamW, EpochRecord, TrainConfig, TrainLog};

use crate::error::CoreError;
use crate::neural::{mlp_forward, MlpParams, ScalarObjective};
use crate::physics::{cell_outputs, g_conservation, reconstruct_fields, CellModel};
use crate::profile::CurrentProfile;
use crate::scalar::Scalar;
use crate::scaling::ScalingSpec;
use crate::solver::{SolverStats, StepOptions, Trajectory};
use crate::Result;

/// Predict the algebraic variables from a state and the applied current:
/// scale, run the network, unscale to physical flux units.
pub fn g_nn_predict<S: Scalar>(
    model: &CellModel,
    params_sizes: &[usize],
    theta: &[S],
    scaling: &ScalingSpec,
    h_d: &[S],
    i_app: f64,
) -> Result<Vec<S>> {
    if h_d.len() != model.layout.n_differential() {
        return Err(CoreError::invalid("g_nn_predict: state length mismatch"));
    }
    let mut input = Vec::new();
    scaling.scale_input(model, h_d, i_app, &mut input);
    let raw = mlp_forward(params_sizes, theta, &input)?;
    Ok(scaling.unscale_flux(model, &raw))
}

/// Closed-loop sampled rollout in generic arithmetic.
pub struct Rollout<S> {
    pub sample_times: Vec<f64>,
    pub states: Vec<Vec<S>>,
    pub hz: Vec<Vec<S>>,
    pub outputs: Vec<Vec<S>>,
    pub gbar: Vec<Vec<S>>,
    pub currents: Vec<f64>,
    pub stats: SolverStats,
    pub step_times: Vec<f64>,
}

/// Integrate the closed loop and record predictions, outputs and
/// conservation residuals at the sample times.
pub fn rollout<S: Scalar, Sys: MinnSystem>(
    sys: &Sys,
    layer_sizes: &[usize],
    theta: &[S],
    h_d0: &[f64],
    profile: &CurrentProfile,
    t_span: (f64, f64),
    opts: &StepOptions,
    sample_times: &[f64],
) -> Result<Rollout<S>> {
    let y0: Vec<S> = h_d0.iter().map(|&v| S::from_f64(v)).collect();
    let path = sys.integrate_closed_loop(layer_sizes, theta, &y0, profile, t_span, opts)?;
    let mut states = Vec::with_capacity(sample_times.len());
    let mut hz = Vec::with_capacity(sample_times.len());
    let mut outputs = Vec::with_capacity(sample_times.len());
    let mut gbar = Vec::with_capacity(sample_times.len());
    let mut currents = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let y = path.sample(t)?;
        let u = profile.eval(t);
        let z = sys.predict(layer_sizes, theta, &y, u)?;
        outputs.push(sys.outputs(&y, &z, u)?);
        gbar.push(sys.conservation(&y, &z, u)?);
        states.push(y);
        hz.push(z);
        currents.push(u);
    }
    Ok(Rollout {
        sample_times: sample_times.to_vec(),
        states,
        hz,
        outputs,
        gbar,
        currents,
        stats: path.stats,
        step_times: path.ts,
    })
}

/// Closed-loop battery simulation with the trained network, as a full
/// [`Trajectory`] (per-step conservation residuals and lithium inventory
/// included).
pub fn simulate_minn(
    model: &CellModel,
    params: &MlpParams,
    scaling: &ScalingSpec,
    h_d0: &[f64],
    profile: &CurrentProfile,
    t_span: (f64, f64),
    opts: &StepOptions,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let started = std::time::Instant::now();
    let sys = BatterySystem::new(model, scaling);
    let y0 = h_d0.to_vec();
    let path = sys.integrate_closed_loop::<f64>(
        &params.layer_sizes,
        &params.theta,
        &y0,
        profile,
        t_span,
        opts,
    )?;
    let mut step_gbar = Vec::with_capacity(path.ts.len());
    let mut step_lithium = Vec::with_capacity(path.ts.len());
    for (t, y) in path.ts.iter().zip(&path.ys) {
        let u = profile.eval(*t);
        let z = sys.predict(&params.layer_sizes, &params.theta, y, u)?;
        let g = g_conservation(model, &z, u)?;
        step_gbar.push(g);
        step_lithium.push(crate::physics::total_lithium(model, y)?);
    }
    let mut states = Vec::with_capacity(sample_times.len());
    let mut hzs = Vec::with_capacity(sample_times.len());
    let mut outputs = Vec::with_capacity(sample_times.len());
    let mut gbar = Vec::with_capacity(sample_times.len());
    let mut currents = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let y = path.sample(t)?;
        let u = profile.eval(t);
        let z = g_nn_predict(model, &params.layer_sizes, &params.theta, scaling, &y, u)?;
        let ce = model.ce_block(&y).to_vec();
        let cs = model.cs_surface(&y);
        let fields = reconstruct_fields(model, &z, &ce, &cs, u)?;
        let out = cell_outputs(model, &y, &fields)?;
        gbar.push(g_conservation(model, &z, u)?);
        outputs.push(out.to_array());
        states.push(y);
        hzs.push(z);
        currents.push(u);
    }
    let mut stats = path.stats;
    stats.wall_s = started.elapsed().as_secs_f64();
    Ok(Trajectory {
        sample_times: sample_times.to_vec(),
        states,
        hz: hzs,
        outputs,
        gbar,
        currents,
        step_times: path.ts,
        step_gbar,
        step_lithium,
        stats,
    })
}

/// Measured training data: a profile, the shared initial state, sample times
/// with quadrature weights, and the measured output tuples.
#[derive(Clone, Debug)]
pub struct TrainingDataset {
    pub profile: CurrentProfile,
    pub h_d0: Vec<f64>,
    pub times: Vec<f64>,
    /// Trapezoid weights over the sample grid (s).
    pub dt: Vec<f64>,
    /// Measured outputs per sample.
    pub targets: Vec<Vec<f64>>,
}

impl TrainingDataset {
    pub fn new(
        profile: CurrentProfile,
        h_d0: Vec<f64>,
        times: Vec<f64>,
        targets: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != targets.len() {
            return Err(CoreError::invalid("dataset needs >= 2 aligned samples"));
        }
        let dt = trapezoid_weights(&times);
        Ok(TrainingDataset { profile, h_d0, times, dt, targets })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}

pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut dt = vec![0.0; n];
    for k in 0..n {
        let left = if k == 0 { times[0] } else { times[k - 1] };
        let right = if k + 1 == n { times[n - 1] } else { times[k + 1] };
        dt[k] = 0.5 * (right - left);
    }
    dt
}

/// Physics-constrained loss: `(L_total, L_y, L_g)`.
///
/// `L_y` is the squared scaled output mismatch, `L_g` the component-wise
/// absolute scaled conservation residual, both weighted by the sample
/// spacing; `L_total = L_y + lambda * L_g`. Integration failures evaluate to
/// the documented finite `penalty` so the optimizer can retreat.
pub fn loss_minn<S: Scalar, Sys: MinnSystem>(
    sys: &Sys,
    layer_sizes: &[usize],
    theta: &[S],
    lambda: f64,
    data: &TrainingDataset,
    opts: &StepOptions,
    penalty: f64,
) -> Result<(S, S, S)> {
    let span = data.span();
    let roll = match rollout(sys, layer_sizes, theta, &data.h_d0, &data.profile, span, opts, &data.times)
    {
        Ok(r) => r,
        Err(CoreError::IntegrationFailure { t, reason }) => {
            log::warn!("loss: integration failure at t = {t:.3}: {reason}; applying penalty");
            let p = S::from_f64(penalty);
            return Ok((p, p, S::zero()));
        }
        Err(e) => return Err(e),
    };
    let y_scales = sys.output_scales();
    let g_scales = sys.conservation_scales();
    let mut l_y = S::zero();
    let mut l_g = S::zero();
    for k in 0..data.times.len() {
        let dt = data.dt[k];
        for ch in 0..sys.n_y() {
            let d = (roll.outputs[k][ch] - data.targets[k][ch]) * (1.0 / y_scales[ch]);
            l_y += d * d * dt;
        }
        for c in 0..sys.n_g() {
            l_g += (roll.gbar[k][c] * (1.0 / g_scales[c])).abs() * dt;
        }
    }
    let total = l_y + l_g * lambda;
    Ok((total, l_y, l_g))
}

/// [`ScalarObjective`] view of the loss for the gradient driver.
pub struct LossObjective<'a, Sys: MinnSystem> {
    pub sys: &'a Sys,
    pub layer_sizes: &'a [usize],
    pub lambda: f64,
    pub data: &'a TrainingDataset,
    pub opts: StepOptions,
    pub penalty: f64,
}

impl<Sys: MinnSystem> ScalarObjective for LossObjective<'_, Sys> {
    fn dim(&self) -> usize {
        crate::neural::n_params(self.layer_sizes)
    }
    fn eval<S: Scalar>(&self, theta: &[S]) -> Result<S> {
        let (total, _, _) =
            loss_minn(self.sys, self.layer_sizes, theta, self.lambda, self.data, &self.opts, self.penalty)?;
        Ok(total)
    }
}
