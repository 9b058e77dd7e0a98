//! Miniature analytic index-1 system for exercising the surrogate machinery
//! end to end: two linear differential states, one algebraic variable with a
//! known explicit root, one measured output.
//!
//! ```text
//! x1' = -k1 x1 + z          0 = a1 x1 + a2 x2 + b u - z
//! x2' =  k2 (x1 - x2)       y  = x1 + c z
//! ```

use crate::minn::MinnSystem;
use crate::profile::CurrentProfile;
use crate::scalar::Scalar;
use crate::solver::{solve_ode, StepOptions};
use crate::Result;

#[derive(Clone, Debug)]
pub struct ToySystem {
    pub k1: f64,
    pub k2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for ToySystem {
    fn default() -> Self {
        ToySystem { k1: 1.0, k2: 8.0, a1: 0.7, a2: -0.4, b: 0.5, c: 0.3 }
    }
}

impl ToySystem {
    /// The explicit algebraic root `z*(h_d, u)`.
    pub fn explicit_root<S: Scalar>(&self, h_d: &[S], u: f64) -> S {
        h_d[0] * self.a1 + h_d[1] * self.a2 + self.b * u
    }

    /// Reference trajectory of the exact closed system at tight tolerance.
    pub fn reference(
        &self,
        h_d0: &[f64],
        profile: &CurrentProfile,
        t_span: (f64, f64),
        sample_times: &[f64],
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let opts = StepOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let path = solve_ode(
            |t, y: &[f64]| {
                let u = profile.eval(t);
                let z = self.explicit_root(y, u);
                self.rhs(y, &[z], u)
            },
            h_d0,
            t_span,
            &opts,
            profile.knots(),
        )?;
        let mut states = Vec::new();
        let mut outs = Vec::new();
        for &t in sample_times {
            let y = path.sample(t)?;
            let u = profile.eval(t);
            let z = self.explicit_root(&y, u);
            outs.push(self.outputs(&y, &[z], u)?);
            states.push(y);
        }
        Ok((states, outs))
    }
}

impl MinnSystem for ToySystem {
    fn n_d(&self) -> usize {
        2
    }
    fn n_z(&self) -> usize {
        1
    }
    fn n_y(&self) -> usize {
        1
    }
    fn n_g(&self) -> usize {
        1
    }

    fn rhs<S: Scalar>(&self, h_d: &[S], h_z: &[S], _u: f64) -> Result<Vec<S>> {
        Ok(vec![
            -h_d[0] * self.k1 + h_z[0],
            (h_d[0] - h_d[1]) * self.k2,
        ])
    }

    fn outputs<S: Scalar>(&self, h_d: &[S], h_z: &[S], _u: f64) -> Result<Vec<S>> {
        Ok(vec![h_d[0] + h_z[0] * self.c])
    }

    fn conservation<S: Scalar>(&self, h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>> {
        Ok(vec![self.explicit_root(h_d, u) - h_z[0]])
    }

    fn state_scales(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }
    fn flux_scales(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn output_scales(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn conservation_scales(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn input_scale(&self) -> f64 {
        1.0
    }
}
