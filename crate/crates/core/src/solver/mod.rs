//! Time integration: the shared Rosenbrock stepping core, the ground-truth
//! index-1 DAE driver with nested Newton consistency, and trajectory
//! assembly (dense output, conservation bookkeeping, solver statistics).

pub mod dae;
pub mod newton;
pub mod ode;
pub mod rosenbrock;

pub use dae::{consistent_init, extended_jacobian, solve_dae, DaeOptions};
pub use newton::{newton_solve, NewtonOptions};
pub use ode::{solve_ode, DenseFdProblem};
pub use rosenbrock::{integrate, OdeProblem, RawPath, SolverStats, StepOptions};

use crate::linalg::Mat;
use crate::Result;

/// Time series of states, outputs, conserved-quantity residuals and solver
/// statistics for one simulation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Output sample times (s).
    pub sample_times: Vec<f64>,
    /// Differential states at the samples.
    pub states: Vec<Vec<f64>>,
    /// Algebraic variables at the samples (Newton roots for the ground
    /// truth, network predictions for surrogate runs).
    pub hz: Vec<Vec<f64>>,
    /// Output triples (voltage, SOC, plating potential).
    pub outputs: Vec<[f64; 3]>,
    /// Conservation residual at the samples.
    pub gbar: Vec<[f64; 2]>,
    /// Applied current at the samples.
    pub currents: Vec<f64>,
    /// Accepted integrator step times.
    pub step_times: Vec<f64>,
    /// Conservation residual at accepted steps.
    pub step_gbar: Vec<[f64; 2]>,
    /// Total lithium inventory at accepted steps (mol/m^2).
    pub step_lithium: Vec<f64>,
    pub stats: SolverStats,
}

impl Trajectory {
    /// Largest relative total-lithium drift over the accepted steps.
    pub fn max_lithium_drift(&self) -> f64 {
        if self.step_lithium.is_empty() {
            return 0.0;
        }
        let li0 = self.step_lithium[0];
        self.step_lithium
            .iter()
            .map(|li| ((li - li0) / li0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest conservation-residual magnitude over accepted steps.
    pub fn max_step_gbar(&self) -> f64 {
        self.step_gbar
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Dense one-sided finite-difference Jacobian of a vector map.
pub fn fd_jacobian<F>(mut f: F, x: &[f64], typical: &[f64]) -> Result<Mat<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let base = f(x)?;
    let m = base.len();
    let n = x.len();
    let mut jac = Mat::zeros(m, n);
    let mut xp = x.to_vec();
    for col in 0..n {
        let eps = 1.49e-8 * x[col].abs().max(typical.get(col).copied().unwrap_or(1.0));
        let saved = xp[col];
        xp[col] += eps;
        let fp = f(&xp)?;
        xp[col] = saved;
        for row in 0..m {
            jac[(row, col)] = (fp[row] - base[row]) / eps;
        }
    }
    Ok(jac)
}
