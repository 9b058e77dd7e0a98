//! Feed-forward surrogate network and its differentiation machinery.

pub mod checkpoint;
pub mod gradient;

pub use gradient::{forward_gradient, ScalarObjective};

use crate::error::CoreError;
use crate::scalar::{gelu, Scalar};
use crate::Result;
use rand::Rng;
use rand::SeedableRng;

/// Multilayer-perceptron parameters: layer sizes plus the flat parameter
/// vector theta in a fixed ordering (per layer: weight matrix row-major,
/// then bias). The flat view round-trips losslessly to the structured view.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    /// `[input, hidden..., output]`; hidden layers use GELU, the head is
    /// linear. Two entries mean a single affine layer.
    pub layer_sizes: Vec<usize>,
    pub theta: Vec<f64>,
}

/// Number of parameters for the given layer sizes.
pub fn n_params(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpParams {
    /// Scaled-uniform fan-in initialization (U(-1/sqrt(fan_in), +1/sqrt(fan_in)))
    /// from a fixed seed; the linear head is shrunk so initial predictions
    /// start near zero.
    pub fn init(layer_sizes: Vec<usize>, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
            return Err(CoreError::invalid("layer sizes need >= 2 nonzero entries"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut theta = Vec::with_capacity(n_params(&layer_sizes));
        let n_layers = layer_sizes.len() - 1;
        for (li, w) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let head_shrink = if li + 1 == n_layers { 0.1 } else { 1.0 };
            for _ in 0..fan_in * fan_out {
                theta.push(rng.gen_range(-bound..bound) * head_shrink);
            }
            for _ in 0..fan_out {
                theta.push(0.0);
            }
        }
        Ok(MlpParams { layer_sizes, theta })
    }

    pub fn zeros(layer_sizes: Vec<usize>) -> Self {
        let theta = vec![0.0; n_params(&layer_sizes)];
        MlpParams { layer_sizes, theta }
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// Forward pass with generic parameters and inputs.
///
/// `theta` must contain exactly the parameters implied by `layer_sizes`.
pub fn mlp_forward<S: Scalar>(layer_sizes: &[usize], theta: &[S], input: &[S]) -> Result<Vec<S>> {
    forward_impl(layer_sizes, theta, input, None)
}

/// Cache of hidden-unit activation derivatives from one forward pass.
pub struct ForwardCache<S> {
    /// gelu'(z) per hidden layer.
    pub act_deriv: Vec<Vec<S>>,
}

/// Forward pass that also records activation derivatives for
/// [`input_jacobian`].
pub fn mlp_forward_cached<S: Scalar>(
    layer_sizes: &[usize],
    theta: &[S],
    input: &[S],
) -> Result<(Vec<S>, ForwardCache<S>)> {
    let mut cache = ForwardCache { act_deriv: Vec::with_capacity(layer_sizes.len().saturating_sub(2)) };
    let out = forward_impl(layer_sizes, theta, input, Some(&mut cache))?;
    Ok((out, cache))
}

fn forward_impl<S: Scalar>(
    layer_sizes: &[usize],
    theta: &[S],
    input: &[S],
    mut cache: Option<&mut ForwardCache<S>>,
) -> Result<Vec<S>> {
    if layer_sizes.len() < 2 {
        return Err(CoreError::invalid("mlp needs at least input and output sizes"));
    }
    if input.len() != layer_sizes[0] {
        return Err(CoreError::invalid(format!(
            "mlp input length {} != {}",
            input.len(),
            layer_sizes[0]
        )));
    }
    if theta.len() != n_params(layer_sizes) {
        return Err(CoreError::invalid(format!(
            "mlp parameter length {} != {}",
            theta.len(),
            n_params(layer_sizes)
        )));
    }
    const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    const INV_SQRT_TAU: f64 = 0.3989422804014327; // 1/sqrt(2 pi)
    let n_layers = layer_sizes.len() - 1;
    let mut act: Vec<S> = input.to_vec();
    let mut off = 0usize;
    for li in 0..n_layers {
        let (n_in, n_out) = (layer_sizes[li], layer_sizes[li + 1]);
        let w = &theta[off..off + n_in * n_out];
        let b = &theta[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let mut z = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = b[o];
            for (wi, ai) in row.iter().zip(&act) {
                acc += *wi * *ai;
            }
            z.push(acc);
        }
        let is_head = li + 1 == n_layers;
        if is_head {
            act = z;
        } else {
            let mut a = Vec::with_capacity(n_out);
            if let Some(c) = cache.as_deref_mut() {
                let mut dv = Vec::with_capacity(n_out);
                for zi in &z {
                    let phi = ((*zi * INV_SQRT_2).erf() + 1.0) * 0.5;
                    let pdf = (-*zi * *zi * 0.5).exp() * INV_SQRT_TAU;
                    a.push(*zi * phi);
                    dv.push(phi + *zi * pdf);
                }
                c.act_deriv.push(dv);
            } else {
                for zi in &z {
                    a.push(gelu(*zi));
                }
            }
            act = a;
        }
    }
    Ok(act)
}

/// Jacobian of the network output with respect to its input, from a cached
/// forward pass: the chain product `W_L diag(g') ... diag(g') W_1`,
/// accumulated from the output side.
pub fn input_jacobian<S: Scalar>(
    layer_sizes: &[usize],
    theta: &[S],
    cache: &ForwardCache<S>,
) -> Vec<Vec<S>> {
    let n_layers = layer_sizes.len() - 1;
    // offsets of each layer's weights
    let mut offsets = Vec::with_capacity(n_layers);
    let mut off = 0usize;
    for li in 0..n_layers {
        offsets.push(off);
        off += layer_sizes[li] * layer_sizes[li + 1] + layer_sizes[li + 1];
    }
    // start from the head weights
    let n_out = layer_sizes[n_layers];
    let n_in_head = layer_sizes[n_layers - 1];
    let w_head = &theta[offsets[n_layers - 1]..offsets[n_layers - 1] + n_in_head * n_out];
    let mut jac: Vec<Vec<S>> = (0..n_out)
        .map(|o| w_head[o * n_in_head..(o + 1) * n_in_head].to_vec())
        .collect();
    for li in (0..n_layers - 1).rev() {
        let dv = &cache.act_deriv[li];
        let (n_in, n_mid) = (layer_sizes[li], layer_sizes[li + 1]);
        let w = &theta[offsets[li]..offsets[li] + n_in * n_mid];
        let mut next: Vec<Vec<S>> = Vec::with_capacity(n_out);
        for row in &jac {
            // (row . diag(dv)) * W
            let mut out_row = vec![S::zero(); n_in];
            for m in 0..n_mid {
                let c = row[m] * dv[m];
                let wrow = &w[m * n_in..(m + 1) * n_in];
                for i in 0..n_in {
                    out_row[i] += c * wrow[i];
                }
            }
            next.push(out_row);
        }
        jac = next;
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(vec![3, 4, 2]);
        let out = mlp_forward(&p.layer_sizes, &p.theta, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_layer_is_exact() {
        // sizes [2, 2]: theta = [w00 w01 w10 w11 b0 b1]
        let p = MlpParams {
            layer_sizes: vec![2, 2],
            theta: vec![1.0, 2.0, -0.5, 3.0, 0.25, -1.0],
        };
        let out = mlp_forward(&p.layer_sizes, &p.theta, &[2.0, -1.0]).unwrap();
        assert_eq!(out, vec![1.0 * 2.0 + 2.0 * -1.0 + 0.25, -0.5 * 2.0 + 3.0 * -1.0 - 1.0]);
    }

    #[test]
    fn hand_computed_1_2_1_network() {
        // W1 = [[0.5],[−1.0]], b1 = [0.1, 0.2]; head W2 = [[2.0, −3.0]], b2 = [0.05]
        let theta = vec![0.5, -1.0, 0.1, 0.2, 2.0, -3.0, 0.05];
        let sizes = vec![1, 2, 1];
        let x = 0.7;
        let z1 = 0.5 * x + 0.1;
        let z2 = -1.0 * x + 0.2;
        let g = |z: f64| z * 0.5 * (1.0 + libm::erf(z * std::f64::consts::FRAC_1_SQRT_2));
        let want = 2.0 * g(z1) - 3.0 * g(z2) + 0.05;
        let out = mlp_forward(&sizes, &theta, &[x]).unwrap();
        assert!((out[0] - want).abs() < 1e-12, "{} vs {want}", out[0]);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let p = MlpParams::zeros(vec![3, 2]);
        assert!(mlp_forward(&p.layer_sizes, &p.theta, &[1.0, 2.0]).is_err());
        assert!(mlp_forward(&p.layer_sizes, &p.theta[..5], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let a = MlpParams::init(vec![4, 8, 2], 7).unwrap();
        let b = MlpParams::init(vec![4, 8, 2], 7).unwrap();
        let c = MlpParams::init(vec![4, 8, 2], 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.theta.len(), n_params(&[4, 8, 2]));
    }

    #[test]
    fn input_jacobian_matches_dual_forward() {
        let p = MlpParams::init(vec![3, 5, 5, 2], 11).unwrap();
        let x0 = [0.3, -0.8, 1.1];
        let theta: Vec<Dual<3>> = p.theta.iter().map(|&v| Dual::constant(v)).collect();
        let xdual: Vec<Dual<3>> = x0.iter().enumerate().map(|(i, &v)| Dual::seeded(v, i)).collect();
        let out_dual = mlp_forward(&p.layer_sizes, &theta, &xdual).unwrap();

        let x_f: Vec<f64> = x0.to_vec();
        let (_, cache) = mlp_forward_cached(&p.layer_sizes, &p.theta, &x_f).unwrap();
        let jac = input_jacobian(&p.layer_sizes, &p.theta, &cache);
        for o in 0..2 {
            for i in 0..3 {
                assert!(
                    (jac[o][i] - out_dual[o].dx[i]).abs() < 1e-12,
                    "({o},{i}): {} vs {}",
                    jac[o][i],
                    out_dual[o].dx[i]
                );
            }
        }
    }
}
