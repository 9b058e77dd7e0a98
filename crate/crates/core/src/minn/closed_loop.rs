//! Battery implementation of the surrogate system with a structured stage
//! solver.
//!
//! The closed-loop Jacobian is `A + B J_nn`: `A` is block diagonal (constant
//! radial diffusion blocks per particle plus the small electrolyte block) and
//! `B J_nn` is a rank-`n_z` coupling through the network. Stage solves use
//! the block factorization of `I/(h gamma) - A` and the Woodbury identity on
//! the coupling, which makes a stage solve two orders of magnitude cheaper
//! than a dense factorization of the full system.

use super::system::MinnSystem;
use crate::error::CoreError;
use crate::linalg::{LuFactor, Mat};
use crate::neural::{input_jacobian, mlp_forward_cached, n_params};
use crate::physics::rhs::elyte_jacobian;
use crate::physics::{cell_outputs, f_rhs, g_conservation, reconstruct_fields, CellModel, Side};
use crate::profile::CurrentProfile;
use crate::scalar::Scalar;
use crate::scaling::{state_scales, ScalingSpec};
use crate::solver::{integrate, OdeProblem, RawPath, StepOptions};
use crate::Result;

/// The cell model viewed as a learnable index-1 system.
pub struct BatterySystem<'a> {
    pub model: &'a CellModel,
    pub scaling: &'a ScalingSpec,
}

impl<'a> BatterySystem<'a> {
    pub fn new(model: &'a CellModel, scaling: &'a ScalingSpec) -> Self {
        BatterySystem { model, scaling }
    }
}

impl MinnSystem for BatterySystem<'_> {
    fn n_d(&self) -> usize {
        self.model.layout.n_differential()
    }
    fn n_z(&self) -> usize {
        self.model.layout.n_algebraic()
    }
    fn n_y(&self) -> usize {
        3
    }
    fn n_g(&self) -> usize {
        2
    }

    fn rhs<S: Scalar>(&self, h_d: &[S], h_z: &[S], _u: f64) -> Result<Vec<S>> {
        f_rhs(self.model, h_d, h_z)
    }

    fn outputs<S: Scalar>(&self, h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>> {
        let ce = self.model.ce_block(h_d);
        let cs = self.model.cs_surface(h_d);
        let fields = reconstruct_fields(self.model, h_z, ce, &cs, u)?;
        let out = cell_outputs(self.model, h_d, &fields)?;
        Ok(vec![out.voltage, out.soc, out.plating])
    }

    fn conservation<S: Scalar>(&self, _h_d: &[S], h_z: &[S], u: f64) -> Result<Vec<S>> {
        let g = g_conservation(self.model, h_z, u)?;
        Ok(vec![g[0], g[1]])
    }

    fn state_scales(&self) -> Vec<f64> {
        state_scales(self.model)
    }
    fn flux_scales(&self) -> Vec<f64> {
        self.scaling.flux_scales(self.model)
    }
    fn output_scales(&self) -> Vec<f64> {
        self.scaling.output_scales().to_vec()
    }
    fn conservation_scales(&self) -> Vec<f64> {
        vec![self.scaling.g_scale; 2]
    }
    fn input_scale(&self) -> f64 {
        self.scaling.current_scale
    }

    fn integrate_closed_loop<S: Scalar>(
        &self,
        layer_sizes: &[usize],
        theta: &[S],
        h_d0: &[S],
        profile: &CurrentProfile,
        t_span: (f64, f64),
        opts: &StepOptions,
    ) -> Result<RawPath<S>> {
        if layer_sizes[0] != self.nn_input_dim() || *layer_sizes.last().unwrap() != self.n_z() {
            return Err(CoreError::invalid(format!(
                "network shape {layer_sizes:?} does not fit system ({} inputs, {} outputs)",
                self.nn_input_dim(),
                self.n_z()
            )));
        }
        if theta.len() != n_params(layer_sizes) {
            return Err(CoreError::invalid("closed loop: theta length mismatch"));
        }
        let mut step_opts = opts.clone();
        if step_opts.scale.is_none() {
            step_opts.scale = Some(self.state_scales());
        }
        let mut problem = BlockStageProblem::new(self, layer_sizes, theta);
        let stops: Vec<f64> = profile.knots().to_vec();
        let mut problem_ref = ProfileProblem { inner: &mut problem, profile };
        integrate(&mut problem_ref, t_span.0, t_span.1, h_d0, &stops, &step_opts)
    }
}

/// Stage solver with the block + low-rank structure.
struct BlockStageProblem<'a, S: Scalar> {
    sys: &'a BatterySystem<'a>,
    layer_sizes: &'a [usize],
    theta: &'a [S],
    in_scales: Vec<f64>,
    flux_scales: Vec<f64>,
    // cached per prepare_w
    h_gamma: f64,
    solid_lu: Vec<LuFactor<f64>>, // one per electrode
    elyte_lu: Option<LuFactor<S>>,
    j_nn: Vec<Vec<S>>,       // n_z rows over n_d columns (physical units)
    z_cols: Vec<Vec<S>>,     // A'^{-1} B, one vector per algebraic column
    core_lu: Option<LuFactor<S>>,
}

impl<'a, S: Scalar> BlockStageProblem<'a, S> {
    fn new(sys: &'a BatterySystem<'a>, layer_sizes: &'a [usize], theta: &'a [S]) -> Self {
        BlockStageProblem {
            sys,
            layer_sizes,
            theta,
            in_scales: sys.state_scales(),
            flux_scales: sys.flux_scales(),
            h_gamma: f64::NAN,
            solid_lu: Vec::new(),
            elyte_lu: None,
            j_nn: Vec::new(),
            z_cols: Vec::new(),
            core_lu: None,
        }
    }

    /// Apply `(I/(h gamma) - A)^{-1}` blockwise.
    fn solve_blocks(&self, b: &[S]) -> Vec<S> {
        let model = self.sys.model;
        let l = &model.layout;
        let mut x = vec![S::zero(); l.n_differential()];
        for (ei, side) in [Side::Anode, Side::Cathode].into_iter().enumerate() {
            let lu = &self.solid_lu[ei];
            for ix in 0..l.n_x(side) {
                let base = l.cs_index(side, ix, 0);
                let seg = &b[base..base + l.n_r];
                let sol = lu.solve_mixed(seg);
                x[base..base + l.n_r].copy_from_slice(&sol);
            }
        }
        let ns = l.n_solid();
        let sol = self.elyte_lu.as_ref().expect("prepared").solve(&b[ns..]);
        x[ns..].copy_from_slice(&sol);
        x
    }
}

impl<S: Scalar> BlockStageProblem<'_, S> {
    fn rhs_at(&mut self, u: f64, y: &[S]) -> Result<Vec<S>> {
        let hz = self.sys.predict(self.layer_sizes, self.theta, y, u)?;
        f_rhs(self.sys.model, y, &hz)
    }

    fn prepare_at(&mut self, u: f64, y: &[S], h_gamma: f64, fresh_jac: bool) -> Result<()> {
        let model = self.sys.model;
        let l = &model.layout;
        let d = 1.0 / h_gamma;

        if fresh_jac || self.j_nn.is_empty() {
            // network Jacobian in physical units
            let input = self.sys.nn_input(y, u);
            let (_, cache) = mlp_forward_cached(self.layer_sizes, self.theta, &input)?;
            let raw = input_jacobian(self.layer_sizes, self.theta, &cache);
            let n_d = l.n_differential();
            self.j_nn = raw
                .iter()
                .enumerate()
                .map(|(o, row)| {
                    let js = self.flux_scales[o];
                    (0..n_d).map(|i| row[i] * (js / self.in_scales[i])).collect()
                })
                .collect();
        }

        // solid blocks: constant real matrices, refactor only when h changes
        if fresh_jac || self.solid_lu.is_empty() || self.h_gamma != h_gamma {
            self.solid_lu.clear();
            for side in [Side::Anode, Side::Cathode] {
                let (a, _) = model.radial_op(side);
                let n = l.n_r;
                let mut w = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        w[(i, j)] = -a[(i, j)];
                    }
                    w[(i, i)] += d;
                }
                self.solid_lu.push(LuFactor::new(w, "radial stage block")?);
            }
        }

        // electrolyte block (state dependent)
        let ce: Vec<S> = model.ce_block(y).to_vec();
        let a_e = elyte_jacobian(model, &ce);
        let n_e = l.n_elyte();
        let mut w_e = Mat::zeros(n_e, n_e);
        for i in 0..n_e {
            for j in 0..n_e {
                w_e[(i, j)] = -a_e[(i, j)];
            }
            w_e[(i, i)] += S::from_f64(d);
        }
        self.elyte_lu = Some(LuFactor::new(w_e, "electrolyte stage block")?);
        self.h_gamma = h_gamma;

        // Z = A'^{-1} B and the Woodbury core K = I - J_nn Z.
        // Sign note: W = A' - B J_nn with A' = I/(h gamma) - A, so
        // W^{-1} = A'^{-1} + Z (I - J_nn Z)^{-1} J_nn A'^{-1}.
        let n_z = l.n_algebraic();
        let b = &model.b_coupling;
        let n_d = l.n_differential();
        self.z_cols = (0..n_z)
            .map(|col| {
                let bc: Vec<S> = (0..n_d).map(|r| S::from_f64(b[(r, col)])).collect();
                self.solve_blocks(&bc)
            })
            .collect();
        let mut core = Mat::zeros(n_z, n_z);
        for o in 0..n_z {
            for p in 0..n_z {
                let mut acc = S::zero();
                for i in 0..n_d {
                    acc += self.j_nn[o][i] * self.z_cols[p][i];
                }
                core[(o, p)] = -acc;
            }
            core[(o, o)] += S::one();
        }
        self.core_lu = Some(LuFactor::new(core, "woodbury core")?);
        Ok(())
    }

    fn solve_at(&mut self, bvec: &[S]) -> Result<Vec<S>> {
        let n_d = self.sys.model.layout.n_differential();
        let n_z = self.sys.model.layout.n_algebraic();
        let x0 = self.solve_blocks(bvec);
        let mut r = vec![S::zero(); n_z];
        for o in 0..n_z {
            let mut acc = S::zero();
            for i in 0..n_d {
                acc += self.j_nn[o][i] * x0[i];
            }
            r[o] = acc;
        }
        let c = self.core_lu.as_ref().expect("prepared").solve(&r);
        let mut x = x0;
        for (p, zc) in self.z_cols.iter().enumerate() {
            let cp = c[p];
            for i in 0..n_d {
                x[i] += zc[i] * cp;
            }
        }
        Ok(x)
    }
}

/// Adapter binding a current profile to the stage problem.
struct ProfileProblem<'a, 'b, S: Scalar> {
    inner: &'a mut BlockStageProblem<'b, S>,
    profile: &'a CurrentProfile,
}

impl<S: Scalar> OdeProblem<S> for ProfileProblem<'_, '_, S> {
    fn dim(&self) -> usize {
        self.inner.sys.model.layout.n_differential()
    }
    fn rhs(&mut self, t: f64, y: &[S]) -> Result<Vec<S>> {
        let u = self.profile.eval(t);
        self.inner.rhs_at(u, y)
    }
    fn prepare_w(&mut self, t: f64, y: &[S], h_gamma: f64, fresh_jac: bool) -> Result<()> {
        let u = self.profile.eval(t);
        self.inner.prepare_at(u, y, h_gamma, fresh_jac)
    }
    fn solve_w(&mut self, b: &[S]) -> Result<Vec<S>> {
        self.inner.solve_at(b)
    }
}
