//! Forward-mode gradients of scalar objectives over a flat parameter vector.
//!
//! The objective is written once, generically over [`Scalar`], and evaluated
//! in dual arithmetic with up to [`LANES`] tangent directions per sweep.
//! Chunks are assembled in fixed index order, so results are bitwise
//! deterministic at any worker count.

use crate::error::CoreError;
use crate::scalar::{Dual, Scalar, LANES};
use crate::Result;

/// A scalar objective evaluable in any scalar arithmetic.
pub trait ScalarObjective: Sync {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, theta: &[S]) -> Result<S>;
}

/// Objective value at `theta` (plain `f64` evaluation).
pub fn objective_value(obj: &impl ScalarObjective, theta: &[f64]) -> Result<f64> {
    obj.eval(theta)
}

/// Exact gradient by dual-number propagation, `chunk <= 8` tangents per
/// sweep. Returns `(value, gradient)`.
///
/// Worker count comes from the `MINN_THREADS` environment variable
/// (default 1); chunk results are written into disjoint index ranges, so the
/// gradient is identical at any thread count.
pub fn forward_gradient(
    obj: &(impl ScalarObjective + ?Sized),
    theta: &[f64],
    chunk: usize,
) -> Result<(f64, Vec<f64>)> {
    if theta.len() != obj.dim() {
        return Err(CoreError::invalid(format!(
            "forward_gradient: theta length {} != objective dim {}",
            theta.len(),
            obj.dim()
        )));
    }
    let chunk = chunk.clamp(1, LANES);
    let n = theta.len();
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();

    let run_chunk = |&start: &usize| -> Result<(usize, f64, Vec<f64>)> {
        let width = chunk.min(n - start);
        let mut th: Vec<Dual<LANES>> = theta.iter().map(|&v| Dual::constant(v)).collect();
        for lane in 0..width {
            th[start + lane].dx[lane] = 1.0;
        }
        let out = obj.eval(&th)?;
        if !out.is_finite() {
            return Err(CoreError::NonFiniteGradient { stage: "objective", chunk_start: start });
        }
        Ok((start, out.re, out.dx[..width].to_vec()))
    };

    let threads: usize = std::env::var("MINN_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);

    let mut grad = vec![0.0; n];
    let mut value = f64::NAN;
    if threads <= 1 || starts.len() <= 1 {
        for s in &starts {
            let (start, v, g) = run_chunk(s)?;
            value = v;
            grad[start..start + g.len()].copy_from_slice(&g);
        }
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CoreError::invalid(format!("thread pool: {e}")))?;
        let results: Vec<Result<(usize, f64, Vec<f64>)>> =
            pool.install(|| starts.par_iter().map(run_chunk).collect());
        for r in results {
            let (start, v, g) = r?;
            value = v;
            grad[start..start + g.len()].copy_from_slice(&g);
        }
    }
    Ok((value, grad))
}
