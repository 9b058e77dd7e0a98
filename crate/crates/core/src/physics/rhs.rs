//! Dynamic right-hand side `d(h_d)/dt = f(h_d, h_z)` of the discretized cell.
//!
//! Solid phase: spherical Fick diffusion per particle, evaluated in flux form
//! with the symmetry condition at the center and the interfacial flux imposed
//! on the surface gradient, `D_s dC_s/dr|_R = j`. Electrolyte: diffusion with
//! the reaction source `a_s (1 - t_plus) j`, no-flux at both current
//! collectors, and a single shared flux value at each domain interface so the
//! discrete total-lithium balance telescopes exactly.

use super::params::{Domain, Side};
use super::CellModel;
use crate::grid::CollocationGrid;
use crate::linalg::Mat;
use crate::scalar::{safe_ops::clamp_floor, Scalar};
use crate::Result;

/// Radial operator in flux form for one electrode: `dc/dt = A c + b j`.
///
/// Built by driving the flux-form evaluation with unit vectors; the operator
/// is exactly linear in `(c, j)`.
///
/// The quadrature weight of the center node is annihilated by the r^2
/// factor, so the plain collocation rows would miss exact mass balance by
/// the (spectrally small) center contribution `w_0 (Dq)(0)`. That defect is
/// folded into the surface row, which makes
/// `sum_k w_k r_k^2 f_k = R^2 j` an identity of the discrete operator while
/// leaving polynomial consistency untouched (`(Dq)(0)` vanishes exactly for
/// resolved profiles).
pub(crate) fn build_radial_operator(grid: &CollocationGrid, d_s: f64) -> (Mat<f64>, Vec<f64>) {
    let n = grid.n_points;
    let r_surf = *grid.nodes.last().unwrap();
    let w0 = grid.quad_weights[0];
    let w_surf = *grid.quad_weights.last().unwrap();
    let eval = |c: &[f64], j: f64| -> Vec<f64> {
        let mut g = grid.diff_matrix.matvec(c);
        g[0] = 0.0; // symmetry at r = 0
        g[n - 1] = j / d_s; // imposed surface gradient
        let q: Vec<f64> = g.iter().zip(&grid.nodes).map(|(gk, r)| gk * r * r).collect();
        let h = grid.diff_matrix.matvec(&q);
        let mut f = vec![0.0; n];
        // center: lim (1/r^2) d(r^2 g)/dr = 3 g'(0)
        let gp = grid.diff_matrix.matvec(&g);
        f[0] = 3.0 * d_s * gp[0];
        for k in 1..n {
            f[k] = d_s * h[k] / (grid.nodes[k] * grid.nodes[k]);
        }
        // conservative correction at the surface
        f[n - 1] += d_s * w0 * h[0] / (w_surf * r_surf * r_surf);
        f
    };
    let mut a = Mat::zeros(n, n);
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let f = eval(&e, 0.0);
        for row in 0..n {
            a[(row, col)] = f[row];
        }
    }
    let b = eval(&vec![0.0; n], 1.0);
    (a, b)
}

/// Constant coupling matrix `B` with `f(h_d, h_z) = f_0(h_d) + B h_z`.
///
/// Columns: surface-flux entry of each particle's radial operator plus the
/// electrolyte source coefficients (interface rows blended).
pub(crate) fn build_flux_coupling(model: &CellModel) -> Mat<f64> {
    let l = &model.layout;
    let p = &model.params;
    let mut b = Mat::zeros(l.n_differential(), l.n_algebraic());

    for side in [Side::Anode, Side::Cathode] {
        let (_, br) = model.radial_op(side);
        let e = p.electrode(side);
        let src = e.a_s * (1.0 - p.t_plus);
        for ix in 0..l.n_x(side) {
            let col = l.j_index(side, ix);
            for ir in 0..l.n_r {
                b[(l.cs_index(side, ix, ir), col)] = br[ir];
            }
            // electrolyte source; interface twins handled below
            let dom = match side {
                Side::Anode => Domain::Anode,
                Side::Cathode => Domain::Cathode,
            };
            b[(l.ce_index(dom, ix), col)] = src / p.eps_e(dom);
        }
    }

    // Interface rows: the blended time derivative weights the one-sided
    // contributions by the endpoint quadrature weights; both twins share it.
    let blends = interface_blends(model);
    for blend in blends {
        let (row_l, row_r) = blend.twin_rows;
        for col in 0..l.n_algebraic() {
            let v = b[(row_l, col)];
            // left twin is the electrode-side row when the interface touches
            // an electrode; source enters the blend with its own weight.
            let src_term = v * blend.w_left * blend.eps_left / blend.denom;
            let v_r = b[(row_r, col)];
            let src_term_r = v_r * blend.w_right * blend.eps_right / blend.denom;
            let combined = src_term + src_term_r;
            b[(row_l, col)] = combined;
            b[(row_r, col)] = combined;
        }
    }
    b
}

/// Geometry of one electrolyte interface blend.
pub(crate) struct InterfaceBlend {
    pub twin_rows: (usize, usize),
    pub w_left: f64,
    pub w_right: f64,
    pub eps_left: f64,
    pub eps_right: f64,
    /// `w_left * eps_left + w_right * eps_right`.
    pub denom: f64,
}

pub(crate) fn interface_blends(model: &CellModel) -> [InterfaceBlend; 2] {
    let p = &model.params;
    let g = &model.grids;
    let [(a_end, s_start), (s_end, c_start)] = model.layout.ce_twin_pairs();
    let w_a = *g.anode_x.quad_weights.last().unwrap();
    let w_s0 = g.sep_x.quad_weights[0];
    let w_s1 = *g.sep_x.quad_weights.last().unwrap();
    let w_c = g.cathode_x.quad_weights[0];
    let (ea, es, ec) = (p.anode.eps_e, p.sep_eps_e, p.cathode.eps_e);
    [
        InterfaceBlend {
            twin_rows: (a_end, s_start),
            w_left: w_a,
            w_right: w_s0,
            eps_left: ea,
            eps_right: es,
            denom: w_a * ea + w_s0 * es,
        },
        InterfaceBlend {
            twin_rows: (s_end, c_start),
            w_left: w_s1,
            w_right: w_c,
            eps_left: es,
            eps_right: ec,
            denom: w_s1 * es + w_c * ec,
        },
    ]
}

struct ElyteEval<S> {
    /// Divergence of the (overridden) flux per domain, local node order.
    div: [Vec<S>; 3],
}

/// Per-domain flux divergence with collector no-flux overrides and a single
/// shared flux value at each interface.
fn elyte_divergence<S: Scalar>(model: &CellModel, ce: &[S]) -> ElyteEval<S> {
    let p = &model.params;
    let l = &model.layout;
    let doms = [Domain::Anode, Domain::Separator, Domain::Cathode];
    let mut q: [Vec<S>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (d, dom) in doms.into_iter().enumerate() {
        let g = model.grids.domain(dom);
        let n = l.n_x_domain(dom);
        let local: Vec<S> = (0..n).map(|ix| ce[l.ce_local(dom, ix)]).collect();
        let grad = g.diff_matrix.matvec_s(&local);
        q[d] = (0..n)
            .map(|k| {
                let c = clamp_floor(local[k], p.ce_floor);
                grad[k] * p.d_e_eff(dom, c)
            })
            .collect();
    }
    // collector no-flux
    let na = l.n_x_a;
    let nc = l.n_x_c;
    q[0][0] = S::zero();
    q[2][nc - 1] = S::zero();
    // shared interface fluxes
    let q_as = (q[0][na - 1] + q[1][0]) * 0.5;
    q[0][na - 1] = q_as;
    q[1][0] = q_as;
    let ns = l.n_x_s;
    let q_sc = (q[1][ns - 1] + q[2][0]) * 0.5;
    q[1][ns - 1] = q_sc;
    q[2][0] = q_sc;

    let div = [
        model.grids.anode_x.diff_matrix.matvec_s(&q[0]),
        model.grids.sep_x.diff_matrix.matvec_s(&q[1]),
        model.grids.cathode_x.diff_matrix.matvec_s(&q[2]),
    ];
    ElyteEval { div }
}

/// Full dynamic right-hand side.
///
/// `h_d` and `h_z` follow the model layout; the result has `h_d` length.
pub fn f_rhs<S: Scalar>(model: &CellModel, h_d: &[S], h_z: &[S]) -> Result<Vec<S>> {
    let l = &model.layout;
    if h_d.len() != l.n_differential() || h_z.len() != l.n_algebraic() {
        return Err(crate::error::CoreError::invalid(format!(
            "f_rhs: state lengths ({}, {}) do not match layout ({}, {})",
            h_d.len(),
            h_z.len(),
            l.n_differential(),
            l.n_algebraic()
        )));
    }
    let p = &model.params;
    let mut out = vec![S::zero(); l.n_differential()];

    // solid phase: per particle dc/dt = A c + b j
    for side in [Side::Anode, Side::Cathode] {
        let (a, b) = model.radial_op(side);
        for ix in 0..l.n_x(side) {
            let j = h_z[l.j_index(side, ix)];
            let base = l.cs_index(side, ix, 0);
            let c = &h_d[base..base + l.n_r];
            let ac = a.matvec_s(c);
            for ir in 0..l.n_r {
                out[base + ir] = ac[ir] + j * b[ir];
            }
        }
    }

    // electrolyte
    let ce = model.ce_block(h_d);
    let ev = elyte_divergence(model, ce);
    let src = |dom: Domain, ix: usize| -> S {
        match dom {
            Domain::Anode => {
                h_z[l.j_index(Side::Anode, ix)] * (p.anode.a_s * (1.0 - p.t_plus))
            }
            Domain::Separator => S::zero(),
            Domain::Cathode => {
                h_z[l.j_index(Side::Cathode, ix)] * (p.cathode.a_s * (1.0 - p.t_plus))
            }
        }
    };
    for (d, dom) in [Domain::Anode, Domain::Separator, Domain::Cathode].into_iter().enumerate() {
        let inv_eps = 1.0 / p.eps_e(dom);
        for ix in 0..l.n_x_domain(dom) {
            out[l.ce_index(dom, ix)] = (ev.div[d][ix] + src(dom, ix)) * inv_eps;
        }
    }
    // interface blends overwrite the one-sided values on both twins
    for blend in interface_blends(model) {
        let (row_l, row_r) = blend.twin_rows;
        let (dom_l, ix_l, dom_r, ix_r, d_l, d_r) = interface_ids(model, row_l, row_r);
        let v = (ev.div[d_l][ix_l] + src(dom_l, ix_l)) * blend.w_left
            + (ev.div[d_r][ix_r] + src(dom_r, ix_r)) * blend.w_right;
        let v = v / blend.denom;
        out[row_l] = v;
        out[row_r] = v;
    }
    Ok(out)
}

/// Map twin rows back to (domain, local index, domain array slot) pairs.
fn interface_ids(
    model: &CellModel,
    row_l: usize,
    row_r: usize,
) -> (Domain, usize, Domain, usize, usize, usize) {
    let l = &model.layout;
    let [(a_end, s_start), (s_end, c_start)] = l.ce_twin_pairs();
    if (row_l, row_r) == (a_end, s_start) {
        (Domain::Anode, l.n_x_a - 1, Domain::Separator, 0, 0, 1)
    } else if (row_l, row_r) == (s_end, c_start) {
        (Domain::Separator, l.n_x_s - 1, Domain::Cathode, 0, 1, 2)
    } else {
        unreachable!("unknown twin pair");
    }
}

/// Analytic electrolyte Jacobian block, d(dCe/dt)/dCe over the electrolyte
/// states (twin columns included). Mirrors [`f_rhs`]'s electrolyte path.
pub(crate) fn elyte_jacobian<S: Scalar>(model: &CellModel, ce: &[S]) -> Mat<S> {
    let p = &model.params;
    let l = &model.layout;
    let n_e = l.n_elyte();
    let doms = [Domain::Anode, Domain::Separator, Domain::Cathode];

    // dq rows per domain over global electrolyte columns
    let mut dq: [Vec<Vec<S>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (d, dom) in doms.into_iter().enumerate() {
        let g = model.grids.domain(dom);
        let n = l.n_x_domain(dom);
        let local: Vec<S> = (0..n).map(|ix| ce[l.ce_local(dom, ix)]).collect();
        let grad = g.diff_matrix.matvec_s(&local);
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = vec![S::zero(); n_e];
            let ck = clamp_floor(local[k], p.ce_floor);
            let de = p.d_e_eff(dom, ck);
            for jx in 0..n {
                row[l.ce_local(dom, jx)] = de * g.diff_matrix[(k, jx)];
            }
            if local[k].value() >= p.ce_floor {
                let dd = p.d_e_eff_deriv(dom, ck);
                row[l.ce_local(dom, k)] += grad[k] * dd;
            }
            rows.push(row);
        }
        dq[d] = rows;
    }
    // collector no-flux rows are identically zero
    let na = l.n_x_a;
    let ns = l.n_x_s;
    let nc = l.n_x_c;
    dq[0][0] = vec![S::zero(); n_e];
    dq[2][nc - 1] = vec![S::zero(); n_e];
    // shared interface flux rows
    let avg = |a: &[S], b: &[S]| -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| (*x + *y) * 0.5).collect()
    };
    let q_as = avg(&dq[0][na - 1], &dq[1][0]);
    dq[0][na - 1] = q_as.clone();
    dq[1][0] = q_as;
    let q_sc = avg(&dq[1][ns - 1], &dq[2][0]);
    dq[1][ns - 1] = q_sc.clone();
    dq[2][0] = q_sc;

    // divergence rows: ddiv[d][k] = sum_m D[k,m] dq[d][m]
    let mut a_e = Mat::zeros(n_e, n_e);
    let mut ddiv: [Vec<Vec<S>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (d, dom) in doms.into_iter().enumerate() {
        let g = model.grids.domain(dom);
        let n = l.n_x_domain(dom);
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = vec![S::zero(); n_e];
            for m in 0..n {
                let dkm = g.diff_matrix[(k, m)];
                for c in 0..n_e {
                    row[c] += dq[d][m][c] * dkm;
                }
            }
            rows.push(row);
        }
        ddiv[d] = rows;
    }
    for (d, dom) in doms.into_iter().enumerate() {
        let inv_eps = 1.0 / p.eps_e(dom);
        for ix in 0..l.n_x_domain(dom) {
            let r = l.ce_local(dom, ix);
            for c in 0..n_e {
                a_e[(r, c)] = ddiv[d][ix][c] * inv_eps;
            }
        }
    }
    for blend in interface_blends(model) {
        let (row_l, row_r) = blend.twin_rows;
        let (_, ix_l, _, ix_r, d_l, d_r) = interface_ids(model, row_l, row_r);
        let rl = row_l - l.n_solid();
        let rr = row_r - l.n_solid();
        for c in 0..n_e {
            let v = (ddiv[d_l][ix_l][c] * blend.w_left + ddiv[d_r][ix_r][c] * blend.w_right)
                / blend.denom;
            a_e[(rl, c)] = v;
            a_e[(rr, c)] = v;
        }
    }
    a_e
}
