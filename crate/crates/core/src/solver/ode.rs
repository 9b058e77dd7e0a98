//! Generic stiff ODE solving with a dense finite-difference Jacobian.

use super::rosenbrock::{integrate, OdeProblem, RawPath, StepOptions};
use crate::linalg::{LuFactor, Mat};
use crate::scalar::Scalar;
use crate::Result;

/// [`OdeProblem`] backed by a user right-hand side; the stage operator uses a
/// one-sided finite-difference Jacobian and a dense LU. Perturbations are
/// applied to the value lanes only, so dual tangents flow through the
/// difference quotients unchanged.
pub struct DenseFdProblem<S, F> {
    dim: usize,
    rhs_fn: F,
    /// Characteristic magnitudes for FD perturbation sizes.
    pub typical: Vec<f64>,
    pub time_dependent: bool,
    jac: Option<Mat<S>>,
    w: Option<LuFactor<S>>,
    pub rhs_count: usize,
}

impl<S: Scalar, F> DenseFdProblem<S, F>
where
    F: FnMut(f64, &[S]) -> Result<Vec<S>>,
{
    pub fn new(dim: usize, rhs_fn: F) -> Self {
        DenseFdProblem {
            dim,
            rhs_fn,
            typical: vec![1.0; dim],
            time_dependent: true,
            jac: None,
            w: None,
            rhs_count: 0,
        }
    }

    pub fn with_typical(mut self, typical: Vec<f64>) -> Self {
        self.typical = typical;
        self
    }
}

impl<S: Scalar, F> OdeProblem<S> for DenseFdProblem<S, F>
where
    F: FnMut(f64, &[S]) -> Result<Vec<S>>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&mut self, t: f64, y: &[S]) -> Result<Vec<S>> {
        self.rhs_count += 1;
        (self.rhs_fn)(t, y)
    }

    fn prepare_w(&mut self, t: f64, y: &[S], h_gamma: f64, fresh_jac: bool) -> Result<()> {
        let n = self.dim;
        if fresh_jac || self.jac.is_none() {
            let base = self.rhs(t, y)?;
            let mut jac = Mat::zeros(n, n);
            let mut yp = y.to_vec();
            for col in 0..n {
                let eps = 1.49e-8 * y[col].value().abs().max(self.typical[col]);
                let saved = yp[col];
                yp[col] = yp[col] + eps;
                let f = self.rhs(t, &yp)?;
                yp[col] = saved;
                for row in 0..n {
                    jac[(row, col)] = (f[row] - base[row]) * (1.0 / eps);
                }
            }
            self.jac = Some(jac);
        }
        let jac = self.jac.as_ref().unwrap();
        let mut w = Mat::zeros(n, n);
        let d = 1.0 / h_gamma;
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] = -jac[(i, j)];
            }
            w[(i, i)] += S::from_f64(d);
        }
        self.w = Some(LuFactor::new(w, "rosenbrock stage matrix")?);
        Ok(())
    }

    fn solve_w(&mut self, b: &[S]) -> Result<Vec<S>> {
        Ok(self.w.as_ref().expect("prepare_w not called").solve(b))
    }

    fn time_dependent(&self) -> bool {
        self.time_dependent
    }
}

/// Adaptive stiff integration of a plain right-hand side, returning the
/// accepted-step path (cubic Hermite dense output via [`RawPath::sample`]).
pub fn solve_ode<S: Scalar, F>(
    rhs: F,
    y0: &[S],
    t_span: (f64, f64),
    opts: &StepOptions,
    stops: &[f64],
) -> Result<RawPath<S>>
where
    F: FnMut(f64, &[S]) -> Result<Vec<S>>,
{
    let mut p = DenseFdProblem::new(y0.len(), rhs);
    if let Some(sc) = &opts.scale {
        p.typical = sc.clone();
    }
    integrate(&mut p, t_span.0, t_span.1, y0, stops, opts)
}
