//! Characteristic scales for states, inputs and outputs.
//!
//! A wide scale separation between internal states and outputs would
//! otherwise unbalance both the solver error norm and the training loss, so
//! every block is referred to its characteristic magnitude: solid
//! concentrations to the saturation value, electrolyte to the initial
//! concentration, fluxes to the uniform 1C flux, currents to 1C.

use crate::physics::{CellModel, Side};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ScalingSpec {
    /// Solid-concentration scales (anode, cathode): the saturation values.
    pub cs_scale: [f64; 2],
    /// Electrolyte scale: the initial concentration.
    pub ce_scale: f64,
    /// Flux scales (anode, cathode): uniform 1C flux.
    pub j_scale: [f64; 2],
    /// Characteristic time (s), usually the profile span.
    pub time_scale: f64,
    /// Output scales: voltage, SOC, plating potential.
    pub v_scale: f64,
    pub soc_scale: f64,
    pub plating_scale: f64,
    /// Conservation-residual scale: the 1C current density.
    pub g_scale: f64,
    /// Applied-current scale: 1C.
    pub current_scale: f64,
}

impl ScalingSpec {
    pub fn from_model(model: &CellModel, time_scale: f64) -> Self {
        let p = &model.params;
        ScalingSpec {
            cs_scale: [p.anode.cs_max, p.cathode.cs_max],
            ce_scale: p.c_e_init,
            j_scale: [p.flux_1c(Side::Anode), p.flux_1c(Side::Cathode)],
            time_scale,
            v_scale: 0.1,
            soc_scale: 0.1,
            plating_scale: 0.1,
            g_scale: p.current_1c,
            current_scale: p.current_1c,
        }
    }

    pub fn output_scales(&self) -> [f64; 3] {
        [self.v_scale, self.soc_scale, self.plating_scale]
    }

    /// Scale the network input `[h_d, I]`.
    pub fn scale_input<S: Scalar>(&self, model: &CellModel, h_d: &[S], i_app: f64, out: &mut Vec<S>) {
        let scales = state_scales(model);
        out.clear();
        for (v, s) in h_d.iter().zip(&scales) {
            out.push(*v * (1.0 / s));
        }
        out.push(S::from_f64(i_app / self.current_scale));
    }

    /// Unscale a network output into physical fluxes (`h_z` order).
    pub fn unscale_flux<S: Scalar>(&self, model: &CellModel, raw: &[S]) -> Vec<S> {
        let l = &model.layout;
        let mut out = Vec::with_capacity(l.n_algebraic());
        for ix in 0..l.n_x_a {
            out.push(raw[l.j_index(Side::Anode, ix)] * self.j_scale[0]);
        }
        for ix in 0..l.n_x_c {
            out.push(raw[l.j_index(Side::Cathode, ix)] * self.j_scale[1]);
        }
        out
    }

    /// Per-flux scales in `h_z` order.
    pub fn flux_scales(&self, model: &CellModel) -> Vec<f64> {
        let l = &model.layout;
        let mut out = Vec::with_capacity(l.n_algebraic());
        out.extend(std::iter::repeat(self.j_scale[0]).take(l.n_x_a));
        out.extend(std::iter::repeat(self.j_scale[1]).take(l.n_x_c));
        out
    }
}

/// Characteristic magnitude of every differential state, layout order.
pub fn state_scales(model: &CellModel) -> Vec<f64> {
    let l = &model.layout;
    let p = &model.params;
    let mut out = vec![0.0; l.n_differential()];
    for side in [Side::Anode, Side::Cathode] {
        let cs = p.electrode(side).cs_max;
        for ix in 0..l.n_x(side) {
            for ir in 0..l.n_r {
                out[l.cs_index(side, ix, ir)] = cs;
            }
        }
    }
    for k in l.n_solid()..l.n_differential() {
        out[k] = p.c_e_init;
    }
    out
}
