//! Ground-truth integration of the semi-explicit index-1 DAE.
//!
//! The algebraic subsystem (pointwise kinetics plus the two conservation
//! integrals, unknowns: fluxes and the two collector potentials) is re-solved
//! by damped Newton at every stage evaluation of the stiff stepper; at value
//! discontinuities of the current profile the stepper stops and a consistent
//! initialization re-runs before integration restarts.

use super::newton::{newton_solve, NewtonOptions};
use super::ode::DenseFdProblem;
use super::rosenbrock::{integrate, RawPath, StepOptions};
use super::Trajectory;
use crate::error::CoreError;
use crate::linalg::Mat;
use crate::physics::{
    algebraic_residual, cell_outputs, f_rhs, g_conservation, reconstruct_fields, total_lithium,
    CellModel, Side,
};
use crate::profile::CurrentProfile;
use crate::scaling::state_scales;
use crate::Result;

/// Tolerances and limits for the DAE driver.
#[derive(Clone, Debug)]
pub struct DaeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub max_steps: usize,
}

impl Default for DaeOptions {
    fn default() -> Self {
        DaeOptions { rtol: 1e-6, atol: 1e-8, newton_tol: 1e-10, newton_max_iters: 20, max_steps: 200_000 }
    }
}

/// Newton solver for the algebraic subsystem with a warm-started iterate.
pub(crate) struct AlgebraicSolver<'m> {
    model: &'m CellModel,
    opts: NewtonOptions,
    warm: Option<Vec<f64>>,
    pub iters_total: usize,
}

impl<'m> AlgebraicSolver<'m> {
    pub fn new(model: &'m CellModel, newton_tol: f64, max_iters: usize) -> Self {
        let l = &model.layout;
        let mut typical = Vec::with_capacity(l.n_algebraic() + 2);
        for side in [Side::Anode, Side::Cathode] {
            let j_scale = model.params.flux_1c(side).abs();
            for _ in 0..l.n_x(side) {
                typical.push(j_scale);
            }
        }
        typical.push(1.0); // collector potentials, volts
        typical.push(1.0);
        AlgebraicSolver {
            model,
            opts: NewtonOptions::new(newton_tol, max_iters, typical),
            warm: None,
        iters_total: 0,
        }
    }

    /// Uniform-flux starting guess with collector potentials from the field
    /// reconstruction average.
    fn initial_guess(&self, h_d: &[f64], i_app: f64) -> Result<Vec<f64>> {
        let m = self.model;
        let l = &m.layout;
        let p = &m.params;
        let mut z = vec![0.0; l.n_algebraic() + 2];
        let ja = i_app / (p.anode.a_s * p.faraday * p.anode.thickness);
        let jc = -i_app / (p.cathode.a_s * p.faraday * p.cathode.thickness);
        for ix in 0..l.n_x_a {
            z[l.j_index(Side::Anode, ix)] = ja;
        }
        for ix in 0..l.n_x_c {
            z[l.j_index(Side::Cathode, ix)] = jc;
        }
        let ce = m.ce_block(h_d);
        let cs = m.cs_surface(h_d);
        let fields = reconstruct_fields(m, &z[..l.n_algebraic()], ce, &cs, i_app)?;
        z[l.n_algebraic()] = fields.phi_s_cc[0];
        z[l.n_algebraic() + 1] = fields.phi_s_cc[1];
        Ok(z)
    }

    /// Solve for `(h_z, phi_s_cc)` at the given differential state.
    pub fn solve(&mut self, h_d: &[f64], i_app: f64) -> Result<(Vec<f64>, [f64; 2], usize)> {
        let m = self.model;
        let nz = m.layout.n_algebraic();
        let guess = match &self.warm {
            Some(w) => w.clone(),
            None => self.initial_guess(h_d, i_app)?,
        };
        let residual = |z: &[f64]| -> Result<Vec<f64>> {
            algebraic_residual(m, h_d, &z[..nz], [z[nz], z[nz + 1]], i_app)
        };
        let attempt = newton_solve(residual, guess, &self.opts);
        let (root, iters) = match attempt {
            Ok(ok) => ok,
            Err(_) => {
                // cold restart from the uniform-flux guess
                let fresh = self.initial_guess(h_d, i_app)?;
                newton_solve(
                    |z: &[f64]| algebraic_residual(m, h_d, &z[..nz], [z[nz], z[nz + 1]], i_app),
                    fresh,
                    &self.opts,
                )?
            }
        };
        self.iters_total += iters;
        self.warm = Some(root.clone());
        Ok((root[..nz].to_vec(), [root[nz], root[nz + 1]], iters))
    }

    pub fn reset_warm(&mut self) {
        self.warm = None;
    }
}

/// Consistent initialization: Newton iteration on the algebraic residual
/// from the uniform-flux initial guess. Returns `(h_z0, phi_s_cc0)`.
pub fn consistent_init(
    model: &CellModel,
    h_d0: &[f64],
    i_app: f64,
    tol: f64,
) -> Result<(Vec<f64>, [f64; 2])> {
    let mut alg = AlgebraicSolver::new(model, tol, 20);
    let (hz, cc, _) = alg.solve(h_d0, i_app).map_err(|e| match e {
        CoreError::ConsistencyFailure { residual, iters, .. } => {
            CoreError::ConsistencyFailure { t: 0.0, residual, iters }
        }
        other => other,
    })?;
    Ok((hz, cc))
}

/// Ground-truth trajectory for a current profile.
///
/// Integration restarts with a fresh consistent initialization at every value
/// discontinuity of the profile; interpolation knots are hit exactly either
/// way. Outputs, roots and conservation residuals are recorded at the
/// requested `sample_times` (cubic Hermite states, re-rooted algebraics) and
/// at every accepted step.
pub fn solve_dae(
    model: &CellModel,
    h_d0: &[f64],
    profile: &CurrentProfile,
    t_span: (f64, f64),
    opts: &DaeOptions,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let started = std::time::Instant::now();
    let (t0, t1) = t_span;
    let scales = state_scales(model);
    let step_opts = StepOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        scale: Some(scales.clone()),
        max_steps: opts.max_steps,
        ..Default::default()
    };

    // Segment at value discontinuities; knots inside segments are stops.
    let mut seg_bounds = vec![t0];
    for d in profile.discontinuities() {
        if d > t0 && d < t1 {
            seg_bounds.push(d);
        }
    }
    seg_bounds.push(t1);

    let mut alg = AlgebraicSolver::new(model, opts.newton_tol, opts.newton_max_iters);
    let mut full: Option<RawPath<f64>> = None;
    let mut y = h_d0.to_vec();
    let mut newton_total = 0usize;

    for seg in seg_bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        // consistent re-initialization at the segment start
        alg.reset_warm();
        let i_a = profile.eval_right(a);
        alg.solve(&y, i_a).map_err(|e| match e {
            CoreError::ConsistencyFailure { residual, iters, .. } => {
                CoreError::ConsistencyFailure { t: a, residual, iters }
            }
            other => other,
        })?;

        let stops: Vec<f64> = profile.knots().iter().copied().filter(|&k| k > a && k < b).collect();
        let solver_cell = std::cell::RefCell::new(&mut alg);
        let mut problem = {
            let rhs = |t: f64, hd: &[f64]| -> Result<Vec<f64>> {
                let i = profile.eval(t);
                let (hz, _cc, _) = solver_cell.borrow_mut().solve(hd, i)?;
                f_rhs(model, hd, &hz)
            };
            DenseFdProblem::new(model.layout.n_differential(), rhs)
                .with_typical(scales.clone())
        };
        let path = integrate(&mut problem, a, b, &y, &stops, &step_opts)?;
        y = path.ys.last().unwrap().clone();
        match &mut full {
            None => full = Some(path),
            Some(acc) => {
                acc.stats.accepted += path.stats.accepted;
                acc.stats.rejected += path.stats.rejected;
                acc.stats.rhs_evals += path.stats.rhs_evals;
                acc.stats.jacobians += path.stats.jacobians;
                acc.ts.extend_from_slice(&path.ts[1..]);
                acc.ys.extend_from_slice(&path.ys[1..]);
                acc.fs.extend_from_slice(&path.fs[1..]);
            }
        }
    }
    let path = full.expect("at least one segment");
    newton_total += alg.iters_total;

    // Post-pass: roots, outputs and conservation at steps and samples.
    let mut poster = AlgebraicSolver::new(model, opts.newton_tol, opts.newton_max_iters);
    let mut step_gbar = Vec::with_capacity(path.ts.len());
    let mut step_lithium = Vec::with_capacity(path.ts.len());
    for (t, yk) in path.ts.iter().zip(&path.ys) {
        let i = profile.eval(*t);
        let (hz, _cc, _) = poster.solve(yk, i)?;
        let g = g_conservation(model, &hz, i)?;
        step_gbar.push(g);
        step_lithium.push(total_lithium(model, yk)?);
    }

    let mut states = Vec::with_capacity(sample_times.len());
    let mut hzs = Vec::with_capacity(sample_times.len());
    let mut outputs = Vec::with_capacity(sample_times.len());
    let mut gbar = Vec::with_capacity(sample_times.len());
    let mut currents = Vec::with_capacity(sample_times.len());
    poster.reset_warm();
    for &t in sample_times {
        let yk = path.sample(t)?;
        let i = profile.eval(t);
        let (hz, _cc, _) = poster.solve(&yk, i)?;
        let ce = model.ce_block(&yk).to_vec();
        let cs = model.cs_surface(&yk);
        let fields = reconstruct_fields(model, &hz, &ce, &cs, i)?;
        let out = cell_outputs(model, &yk, &fields)?;
        gbar.push(g_conservation(model, &hz, i)?);
        states.push(yk);
        hzs.push(hz);
        outputs.push(out.to_array());
        currents.push(i);
    }

    let mut stats = path.stats;
    stats.newton_iters = newton_total + poster.iters_total;
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

/// Jacobian of the extended ground-truth system
/// `[f(h_d, h_z); residual(h_d, h_z, phi_cc)]` with respect to
/// `(h_d, h_z, phi_cc)`, by finite differences. Its conditioning reflects
/// the timescale separation the surrogate removes.
pub fn extended_jacobian(
    model: &CellModel,
    h_d: &[f64],
    h_z: &[f64],
    phi_cc: [f64; 2],
    i_app: f64,
) -> Result<Mat<f64>> {
    let l = &model.layout;
    let (nd, nz) = (l.n_differential(), l.n_algebraic());
    let n = nd + nz + 2;
    let mut x = Vec::with_capacity(n);
    x.extend_from_slice(h_d);
    x.extend_from_slice(h_z);
    x.push(phi_cc[0]);
    x.push(phi_cc[1]);
    let mut typical = state_scales(model);
    for side in [Side::Anode, Side::Cathode] {
        let j_scale = model.params.flux_1c(side).abs();
        for _ in 0..l.n_x(side) {
            typical.push(j_scale);
        }
    }
    typical.push(1.0);
    typical.push(1.0);
    let eval = |v: &[f64]| -> Result<Vec<f64>> {
        let hd = &v[..nd];
        let hz = &v[nd..nd + nz];
        let cc = [v[nd + nz], v[nd + nz + 1]];
        let mut out = f_rhs(model, hd, hz)?;
        out.extend(algebraic_residual(model, hd, hz, cc, i_app)?);
        Ok(out)
    };
    super::fd_jacobian(eval, &x, &typical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::initial_state;
    use crate::physics::testutil::truth_model;
    use crate::profile::CurrentProfile;

    #[test]
    fn equilibrium_consistent_init_is_zero_flux_and_ocp() {
        let m = truth_model();
        let h_d = initial_state(&m, 0.5);
        let (hz, cc) = consistent_init(&m, &h_d, 0.0, 1e-10).unwrap();
        for j in &hz {
            assert!(j.abs() < 1e-12);
        }
        let cs = m.cs_surface(&h_d);
        let ua = m.params.anode.ocp.eval(cs[0] / m.params.anode.cs_max);
        let uc = m.params.cathode.ocp.eval(cs[m.layout.n_x_a] / m.params.cathode.cs_max);
        assert!((cc[0] - ua).abs() < 1e-10);
        assert!((cc[1] - uc).abs() < 1e-10);
    }

    #[test]
    fn small_current_converges_quickly_from_uniform_guess() {
        let m = truth_model();
        let h_d = initial_state(&m, 0.5);
        let i = 0.1 * m.params.current_1c;
        let mut alg = AlgebraicSolver::new(&m, 1e-10, 20);
        let (hz, _cc, iters) = alg.solve(&h_d, i).unwrap();
        assert!(iters <= 5, "took {iters} Newton iterations");
        let res = algebraic_residual(&m, &h_d, &hz, _cc, i).unwrap();
        assert!(res.iter().all(|r| r.abs() <= 1e-10));
    }

    #[test]
    fn current_sign_flip_flips_the_root() {
        let m = truth_model();
        let h_d = initial_state(&m, 0.5);
        let i = 0.5 * m.params.current_1c;
        let (hz_p, _) = consistent_init(&m, &h_d, i, 1e-11).unwrap();
        let (hz_m, _) = consistent_init(&m, &h_d, -i, 1e-11).unwrap();
        for (a, b) in hz_p.iter().zip(&hz_m) {
            // antisymmetric up to the (small) asymmetry of the OCP slopes
            assert!(
                (a + b).abs() <= 2e-3 * a.abs().max(1e-12),
                "j = {a} vs flipped {b}"
            );
        }
    }

    #[test]
    fn zero_current_hold_is_stationary() {
        let m = truth_model();
        let h_d = initial_state(&m, 0.5);
        let profile = CurrentProfile::constant(0.0, 10.0);
        let samples: Vec<f64> = (0..6).map(|k| k as f64 * 2.0).collect();
        let traj = solve_dae(&m, &h_d, &profile, (0.0, 10.0), &DaeOptions::default(), &samples).unwrap();
        let last = traj.states.last().unwrap();
        for (a, b) in last.iter().zip(&h_d) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
        // flat voltage trace
        let v0 = traj.outputs[0][0];
        for o in &traj.outputs {
            assert!((o[0] - v0).abs() < 1e-9);
        }
    }
}
