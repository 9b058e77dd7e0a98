//! Damped Newton iteration with a dense finite-difference Jacobian, used for
//! algebraic consistency solves.

use crate::error::CoreError;
use crate::linalg::{LuFactor, Mat};
use crate::Result;

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    /// Max-norm residual tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Characteristic magnitude per unknown for the FD perturbation.
    pub typical: Vec<f64>,
}

impl NewtonOptions {
    pub fn new(tol: f64, max_iters: usize, typical: Vec<f64>) -> Self {
        NewtonOptions { tol, max_iters, typical }
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve `F(x) = 0` from `x0`. Returns the root and the iteration count.
pub fn newton_solve<F>(mut f: F, x0: Vec<f64>, opts: &NewtonOptions) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0;
    let mut res = f(&x)?;
    if res.len() != n {
        return Err(CoreError::invalid("newton: residual length mismatch"));
    }
    let mut rnorm = max_norm(&res);
    for iter in 0..opts.max_iters {
        if rnorm <= opts.tol {
            return Ok((x, iter));
        }
        // finite-difference Jacobian, column-wise
        let mut jac = Mat::zeros(n, n);
        for col in 0..n {
            let typ = opts.typical.get(col).copied().unwrap_or(1.0);
            let eps = 1.49e-8 * x[col].abs().max(typ);
            let mut xp = x.clone();
            xp[col] += eps;
            let rp = f(&xp)?;
            for row in 0..n {
                jac[(row, col)] = (rp[row] - res[row]) / eps;
            }
        }
        let lu = LuFactor::new(jac, "newton jacobian")?;
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = lu.solve(&neg);

        // damped update: halve until the residual stops growing
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let xt: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + lambda * s).collect();
            let rt = f(&xt)?;
            let rt_norm = max_norm(&rt);
            if rt_norm <= rnorm || rt_norm <= opts.tol {
                x = xt;
                res = rt;
                rnorm = rt_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // take the smallest damped step anyway; stagnation is caught by
            // the iteration limit
            let xt: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + lambda * s).collect();
            res = f(&xt)?;
            rnorm = max_norm(&res);
            x = xt;
        }
    }
    if rnorm <= opts.tol {
        return Ok((x, opts.max_iters));
    }
    Err(CoreError::ConsistencyFailure { t: f64::NAN, residual: rnorm, iters: opts.max_iters })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_coupled_nonlinear_system() {
        // x^2 + y^2 = 4, x y = 1
        let f = |v: &[f64]| -> crate::Result<Vec<f64>> {
            Ok(vec![v[0] * v[0] + v[1] * v[1] - 4.0, v[0] * v[1] - 1.0])
        };
        let opts = NewtonOptions::new(1e-12, 30, vec![1.0, 1.0]);
        let (x, iters) = newton_solve(f, vec![2.0, 0.3], &opts).unwrap();
        assert!(iters < 12);
        assert!((x[0] * x[0] + x[1] * x[1] - 4.0).abs() < 1e-11);
        assert!((x[0] * x[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        // no real root: x^2 + 1 = 0
        let f = |v: &[f64]| -> crate::Result<Vec<f64>> { Ok(vec![v[0] * v[0] + 1.0]) };
        let opts = NewtonOptions::new(1e-12, 10, vec![1.0]);
        assert!(newton_solve(f, vec![1.0], &opts).is_err());
    }
}
