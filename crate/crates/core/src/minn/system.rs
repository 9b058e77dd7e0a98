//! Abstraction of a semi-explicit index-1 system whose algebraic variables
//! are supplied by a learned explicit map.
//!
//! The surrogate training loop, loss and closed-loop simulation are written
//! against this trait; the battery model and the analytic toy system both
//! implement it. Systems may override the closed-loop integration to exploit
//! structure in the stage solves.

use crate::neural::{mlp_forward, n_params};
use crate::profile::CurrentProfile;
use crate::scalar::Scalar;
use crate::solver::{integrate, DenseFdProblem, RawPath, StepOptions};
use crate::Result;

/// A dynamic system `h_d' = f(h_d, h_z, u)`, `0 = g(h_d, h_z, u)`,
/// `y = Y(h_d, h_z, u)` together with its characteristic scales.
pub trait MinnSystem: Sync {
    fn n_d(&self) -> usize;
    fn n_z(&self) -> usize;
    fn n_y(&self) -> usize;
    fn n_g(&self) -> usize;

    fn rhs<S: Scalar>(&self, h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>>;
    fn outputs<S: Scalar>(&self, h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>>;
    fn conservation<S: Scalar>(&self, h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>>;

    /// Characteristic magnitudes of the differential states.
    fn state_scales(&self) -> Vec<f64>;
    /// Characteristic magnitudes of the algebraic variables.
    fn flux_scales(&self) -> Vec<f64>;
    /// Characteristic magnitudes of the outputs.
    fn output_scales(&self) -> Vec<f64>;
    /// Characteristic magnitudes of the conserved quantities.
    fn conservation_scales(&self) -> Vec<f64>;
    /// Characteristic magnitude of the control input.
    fn input_scale(&self) -> f64;

    /// Network input dimension: states plus the control input.
    fn nn_input_dim(&self) -> usize {
        self.n_d() + 1
    }

    /// Scaled network input `[h_d / scales, u / u_scale]`.
    fn nn_input<S: Scalar>(&self, h_d: &[S], u: f64) -> Vec<S> {
        let scales = self.state_scales();
        let mut out = Vec::with_capacity(self.nn_input_dim());
        for (v, s) in h_d.iter().zip(&scales) {
            out.push(*v * (1.0 / s));
        }
        out.push(S::from_f64(u / self.input_scale()));
        out
    }

    /// Surrogate prediction of the algebraic variables in physical units.
    fn predict<S: Scalar>(
        &self,
        layer_sizes: &[usize],
        theta: &[S],
        h_d: &[S],
        u: f64,
    ) -> Result<Vec<S>> {
        let input = self.nn_input(h_d, u);
        let raw = mlp_forward(layer_sizes, theta, &input)?;
        let fs = self.flux_scales();
        Ok(raw.iter().zip(&fs).map(|(r, s)| *r * *s).collect())
    }

    /// Closed-loop integration `h_d' = f(h_d, G_NN(h_d, u), u)`.
    ///
    /// The default uses the dense finite-difference stage solver; systems
    /// with exploitable Jacobian structure override this.
    fn integrate_closed_loop<S: Scalar>(
        &self,
        layer_sizes: &[usize],
        theta: &[S],
        h_d0: &[S],
        profile: &CurrentProfile,
        t_span: (f64, f64),
        opts: &StepOptions,
    ) -> Result<RawPath<S>> {
        if theta.len() != n_params(layer_sizes) {
            return Err(crate::error::CoreError::invalid(
                "closed loop: theta length does not match layer sizes",
            ));
        }
        let stops: Vec<f64> = profile.knots().to_vec();
        let mut step_opts = opts.clone();
        if step_opts.scale.is_none() {
            step_opts.scale = Some(self.state_scales());
        }
        let rhs = |t: f64, y: &[S]| -> Result<Vec<S>> {
            let u = profile.eval(t);
            let hz = self.predict(layer_sizes, theta, y, u)?;
            self.rhs(y, &hz, u)
        };
        let mut problem =
            DenseFdProblem::new(self.n_d(), rhs).with_typical(self.state_scales());
        integrate(&mut problem, t_span.0, t_span.1, h_d0, &stops, &step_opts)
    }
}
