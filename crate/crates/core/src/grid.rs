//! Chebyshev spectral collocation primitives.
//!
//! Every spatial and radial domain in the cell model is discretized on
//! Chebyshev–Gauss–Lobatto nodes. Endpoints are included so boundary and
//! interface conditions apply at nodes directly. The grid owns a first
//! derivative operator (barycentric form with the negative-sum diagonal),
//! Clenshaw–Curtis quadrature weights, and a cumulative-integration operator
//! built through the Chebyshev coefficient antiderivative recurrence.

use crate::error::CoreError;
use crate::linalg::{LuFactor, Mat};
use crate::scalar::Scalar;
use crate::Result;

/// Collocation grid on a physical interval `[a, b]`.
///
/// Immutable after construction; safe to share across workers.
#[derive(Clone, Debug)]
pub struct CollocationGrid {
    pub n_points: usize,
    /// Nodes in ascending order, `nodes[0] = a`, `nodes[n-1] = b`.
    pub nodes: Vec<f64>,
    /// First-derivative operator (1/m).
    pub diff_matrix: Mat<f64>,
    /// Interpolatory quadrature weights (m); exact for degree <= n-1.
    pub quad_weights: Vec<f64>,
    /// Domain bounds (m).
    pub domain: (f64, f64),
    /// Antiderivative operator anchored to zero at the first node.
    cumint_matrix: Mat<f64>,
    /// Barycentric weights for interpolation.
    bary: Vec<f64>,
}

/// Chebyshev polynomial values T_0..T_{deg} at `x` (on [-1, 1]).
fn cheb_eval_all(x: f64, deg: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(deg + 1);
    t.push(1.0);
    if deg >= 1 {
        t.push(x);
    }
    for j in 2..=deg {
        let v = 2.0 * x * t[j - 1] - t[j - 2];
        t.push(v);
    }
    t
}

/// Build a Chebyshev–Gauss–Lobatto grid with `n >= 2` points on `[a, b]`.
pub fn chebyshev_grid(n: usize, a: f64, b: f64) -> Result<CollocationGrid> {
    if n < 2 {
        return Err(CoreError::invalid(format!("chebyshev_grid: n = {n} < 2")));
    }
    if !(a < b) {
        return Err(CoreError::invalid(format!("chebyshev_grid: need a < b, got [{a}, {b}]")));
    }
    let nm1 = (n - 1) as f64;
    // Reference nodes ascending on [-1, 1]: xi_k = -cos(k pi / (n-1)).
    let xi: Vec<f64> = (0..n).map(|k| -(k as f64 * std::f64::consts::PI / nm1).cos()).collect();
    let half = 0.5 * (b - a);
    let nodes: Vec<f64> = xi.iter().map(|&x| a + half * (x + 1.0)).collect();

    // Barycentric weights: (-1)^k, halved at the endpoints.
    let bary: Vec<f64> = (0..n)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();

    // Differentiation matrix on the physical nodes, negative-sum diagonal.
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        let mut rowsum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                rowsum += v;
            }
        }
        d[(i, i)] = -rowsum;
    }

    // Chebyshev Vandermonde at the reference nodes; used for quadrature and
    // the cumulative integration operator.
    let mut v = Mat::zeros(n, n);
    for k in 0..n {
        let t = cheb_eval_all(xi[k], n - 1);
        for j in 0..n {
            v[(k, j)] = t[j];
        }
    }
    let vlu = LuFactor::new(v.clone(), "chebyshev vandermonde")?;

    // Clenshaw–Curtis weights solve V^T w = integrals of T_j over [-1,1].
    let mut vt = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            vt[(i, j)] = v[(j, i)];
        }
    }
    let rhs: Vec<f64> = (0..n)
        .map(|j| if j % 2 == 0 { 2.0 / (1.0 - (j * j) as f64) } else { 0.0 })
        .collect();
    let w_ref = LuFactor::new(vt, "clenshaw-curtis")?.solve(&rhs);
    let quad_weights: Vec<f64> = w_ref.iter().map(|w| w * half).collect();

    // Cumulative integration: values -> coefficients -> antiderivative
    // coefficients -> values at nodes, anchored at the first node.
    let mut q = Mat::zeros(n, n);
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let c = vlu.solve(&e);
        // antiderivative coefficients b_1..b_n (b_0 fixed by anchoring)
        let mut bcoef = vec![0.0; n + 1];
        for k in 1..=n {
            let prev = if k == 1 { 2.0 * c[0] } else { c[k - 1] };
            let next = if k + 1 < n { c[k + 1] } else { 0.0 };
            bcoef[k] = (prev - next) / (2.0 * k as f64);
        }
        for (row, &x) in xi.iter().enumerate() {
            let t = cheb_eval_all(x, n);
            let mut val = 0.0;
            for k in 1..=n {
                val += bcoef[k] * t[k];
            }
            q[(row, col)] = val;
        }
        let base = q[(0, col)];
        for row in 0..n {
            q[(row, col)] = (q[(row, col)] - base) * half;
        }
    }

    Ok(CollocationGrid {
        n_points: n,
        nodes,
        diff_matrix: d,
        quad_weights,
        domain: (a, b),
        cumint_matrix: q,
        bary,
    })
}

impl CollocationGrid {
    /// Derivative of the spectral interpolant at the nodes.
    pub fn differentiate<S: Scalar>(&self, values: &[S]) -> Result<Vec<S>> {
        self.check_len(values.len())?;
        Ok(self.diff_matrix.matvec_s(values))
    }

    /// Quadrature of nodal values over the whole domain.
    pub fn integrate<S: Scalar>(&self, values: &[S]) -> Result<S> {
        self.check_len(values.len())?;
        let mut acc = S::zero();
        for (v, w) in values.iter().zip(&self.quad_weights) {
            acc += *v * *w;
        }
        Ok(acc)
    }

    /// Antiderivative of the spectral interpolant at the nodes, anchored to
    /// zero at the first node. Exact for polynomials of degree <= n-2.
    pub fn integrate_cumulative<S: Scalar>(&self, values: &[S]) -> Result<Vec<S>> {
        self.check_len(values.len())?;
        Ok(self.cumint_matrix.matvec_s(values))
    }

    /// Barycentric Lagrange interpolation at `x` in `[a, b]`; exact at nodes.
    pub fn interpolate<S: Scalar>(&self, values: &[S], x: f64) -> Result<S> {
        self.check_len(values.len())?;
        let (a, b) = self.domain;
        if !(x >= a && x <= b) {
            return Err(CoreError::OutOfDomain { what: "interpolation point", value: x, lo: a, hi: b });
        }
        // Exact hit on a node short-circuits the barycentric formula.
        for (k, &xk) in self.nodes.iter().enumerate() {
            if x == xk {
                return Ok(values[k]);
            }
        }
        let mut num = S::zero();
        let mut den = 0.0;
        for k in 0..self.n_points {
            let c = self.bary[k] / (x - self.nodes[k]);
            num += values[k] * c;
            den += c;
        }
        Ok(num / den)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(CoreError::invalid(format!(
                "grid expects {} nodal values, got {len}",
                self.n_points
            )));
        }
        Ok(())
    }
}

/// Free-function form of [`CollocationGrid::integrate_cumulative`].
pub fn integrate_cumulative<S: Scalar>(grid: &CollocationGrid, values: &[S]) -> Result<Vec<S>> {
    grid.integrate_cumulative(values)
}

/// Free-function form of [`CollocationGrid::interpolate`].
pub fn interpolate<S: Scalar>(grid: &CollocationGrid, values: &[S], x: f64) -> Result<S> {
    grid.interpolate(values, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
        coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
    }

    fn poly_antider(coeffs: &[f64]) -> Vec<f64> {
        // constant of integration zero
        let mut out = vec![0.0];
        out.extend(coeffs.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)));
        out
    }

    #[test]
    fn two_point_grid_matches_first_order_operator() {
        let g = chebyshev_grid(2, -1.0, 1.0).unwrap();
        assert_eq!(g.nodes, vec![-1.0, 1.0]);
        for i in 0..2 {
            assert!((g.diff_matrix[(i, 0)] + 0.5).abs() < 1e-15);
            assert!((g.diff_matrix[(i, 1)] - 0.5).abs() < 1e-15);
        }
        // derivative of a constant is zero
        let d = g.differentiate(&[3.0, 3.0]).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn three_point_grid_differentiates_x_squared() {
        let g = chebyshev_grid(3, -1.0, 1.0).unwrap();
        assert!(g.nodes.iter().zip(&[-1.0, 0.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        let vals: Vec<f64> = g.nodes.iter().map(|x| x * x).collect();
        let d = g.differentiate(&vals).unwrap();
        let expect = [-2.0, 0.0, 2.0];
        for (a, b) in d.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn quadrature_weights_sum_to_interval_length() {
        let g = chebyshev_grid(5, 0.0, 2.0).unwrap();
        let total: f64 = g.quad_weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_integration_of_constant_gives_coordinates() {
        let g = chebyshev_grid(4, 0.0, 1.0).unwrap();
        let f = g.integrate_cumulative(&vec![1.0; 4]).unwrap();
        for (v, x) in f.iter().zip(&g.nodes) {
            assert!((v - x).abs() < 1e-13, "{v} vs {x}");
        }
    }

    #[test]
    fn cumulative_integration_of_linear_gives_square() {
        let g = chebyshev_grid(4, 0.0, 1.0).unwrap();
        let vals: Vec<f64> = g.nodes.iter().map(|x| 2.0 * x).collect();
        let f = g.integrate_cumulative(&vals).unwrap();
        for (v, x) in f.iter().zip(&g.nodes) {
            assert!((v - x * x).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_integration_of_zero_is_zero() {
        let g = chebyshev_grid(6, -2.0, 3.0).unwrap();
        let f = g.integrate_cumulative(&vec![0.0; 6]).unwrap();
        assert!(f.iter().all(|v| v.abs() == 0.0));
    }

    #[test]
    fn interpolation_of_cubic_at_offnode_point() {
        let g = chebyshev_grid(5, -1.0, 1.0).unwrap();
        let vals: Vec<f64> = g.nodes.iter().map(|x| x.powi(3)).collect();
        let y = g.interpolate(&vals, 0.3).unwrap();
        assert!((y - 0.027).abs() < 1e-13);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_for_constants() {
        let g = chebyshev_grid(7, 0.0, 5.0).unwrap();
        let vals: Vec<f64> = (0..7).map(|k| (k * k) as f64).collect();
        for k in 0..7 {
            let y = g.interpolate(&vals, g.nodes[k]).unwrap();
            assert_eq!(y, vals[k]);
        }
        let c = g.interpolate(&vec![4.25; 7], 1.234).unwrap();
        assert!((c - 4.25).abs() < 1e-13);
    }

    #[test]
    fn interpolation_outside_domain_errors() {
        let g = chebyshev_grid(4, 0.0, 1.0).unwrap();
        assert!(g.interpolate(&vec![0.0; 4], 1.5).is_err());
        assert!(g.interpolate(&vec![0.0; 4], -0.1).is_err());
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        assert!(chebyshev_grid(1, 0.0, 1.0).is_err());
        assert!(chebyshev_grid(4, 1.0, 1.0).is_err());
        assert!(chebyshev_grid(4, 2.0, 1.0).is_err());
    }

    #[test]
    fn diff_matrix_rows_sum_to_zero() {
        for n in [2, 3, 5, 9, 14] {
            let g = chebyshev_grid(n, 0.3, 2.7).unwrap();
            for i in 0..n {
                let s: f64 = g.diff_matrix.row(i).iter().sum();
                assert!(s.abs() < 1e-12, "n={n} row={i} sum={s}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn polynomial_exactness(
            n in 3usize..12,
            coeffs in prop::collection::vec(-2.0f64..2.0, 1..12),
            span in 0.5f64..4.0,
            a in -2.0f64..2.0,
            xq in 0.0f64..1.0,
        ) {
            let b = a + span;
            let g = chebyshev_grid(n, a, b).unwrap();
            let deg = (n - 1).min(coeffs.len() - 1);
            let coeffs = &coeffs[..=deg];
            let vals: Vec<f64> = g.nodes.iter().map(|&x| poly_eval(coeffs, x)).collect();
            let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));

            // differentiation
            let dp = poly_deriv(coeffs);
            let d = g.differentiate(&vals).unwrap();
            let dscale = scale / span + d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (i, &x) in g.nodes.iter().enumerate() {
                prop_assert!((d[i] - poly_eval(&dp, x)).abs() <= 1e-10 * dscale.max(1.0));
            }

            // quadrature
            let anti = poly_antider(coeffs);
            let exact = poly_eval(&anti, b) - poly_eval(&anti, a);
            let qv = g.integrate(&vals).unwrap();
            prop_assert!((qv - exact).abs() <= 1e-10 * (scale * span).max(1.0));

            // interpolation at a random interior point
            let x = a + xq * span;
            let iv = g.interpolate(&vals, x).unwrap();
            prop_assert!((iv - poly_eval(coeffs, x)).abs() <= 1e-10 * scale.max(1.0));

            // cumulative integration (requires degree <= n-2)
            if deg + 1 <= n - 1 {
                let f = g.integrate_cumulative(&vals).unwrap();
                for (i, &x) in g.nodes.iter().enumerate() {
                    let exact = poly_eval(&anti, x) - poly_eval(&anti, a);
                    prop_assert!((f[i] - exact).abs() <= 1e-10 * (scale * span).max(1.0));
                }
                // composition: differentiating the antiderivative recovers the input
                let back = g.differentiate(&f).unwrap();
                for i in 0..n {
                    prop_assert!((back[i] - vals[i]).abs() <= 1e-9 * (scale / span).max(scale).max(1.0));
                }
            }
        }
    }
}
