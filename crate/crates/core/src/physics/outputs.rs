//! Output map: terminal voltage, state of charge, plating potential; plus
//! the uniform initial state and the conserved total-lithium functional.

use super::fields::FieldReconstruction;
use super::params::{Domain, Side};
use super::CellModel;
use crate::scalar::Scalar;
use crate::Result;

/// Output triple of one sample.
#[derive(Clone, Copy, Debug)]
pub struct Outputs<S> {
    /// Terminal voltage, cathode collector minus anode collector (V).
    pub voltage: S,
    /// State of charge from the volume-averaged anode stoichiometry.
    pub soc: S,
    /// Solid minus ionic potential at the anode–separator interface (V).
    pub plating: S,
}

impl<S: Scalar> Outputs<S> {
    pub fn to_array(&self) -> [S; 3] {
        [self.voltage, self.soc, self.plating]
    }
}

/// Volume-and-thickness-averaged anode stoichiometry.
pub fn mean_anode_stoich<S: Scalar>(model: &CellModel, h_d: &[S]) -> Result<S> {
    let l = &model.layout;
    let p = &model.params;
    let gr = &model.grids.anode_r;
    let gx = &model.grids.anode_x;
    let r3 = p.anode.radius.powi(3);
    let mut per_x = Vec::with_capacity(l.n_x_a);
    for ix in 0..l.n_x_a {
        let base = l.cs_index(Side::Anode, ix, 0);
        let mut acc = S::zero();
        for ir in 0..l.n_r {
            let r = gr.nodes[ir];
            acc += h_d[base + ir] * (gr.quad_weights[ir] * r * r);
        }
        per_x.push(acc * (3.0 / (r3 * p.anode.cs_max)));
    }
    let avg = gx.integrate(&per_x)? * (1.0 / p.anode.thickness);
    Ok(avg)
}

/// Terminal voltage, SOC and plating potential from a state and its
/// reconstructed fields.
pub fn cell_outputs<S: Scalar>(
    model: &CellModel,
    h_d: &[S],
    fields: &FieldReconstruction<S>,
) -> Result<Outputs<S>> {
    let l = &model.layout;
    let p = &model.params;
    let voltage = fields.phi_s_cc[1] - fields.phi_s_cc[0];
    let xbar = mean_anode_stoich(model, h_d)?;
    let soc = (xbar - p.stoich_0pct) * (1.0 / (p.stoich_100pct - p.stoich_0pct));
    // anode-separator interface is the last anode node
    let k = l.j_index(Side::Anode, l.n_x_a - 1);
    let plating = fields.phi_s[k] - fields.phi_e[l.ce_local(Domain::Anode, l.n_x_a - 1)];
    Ok(Outputs { voltage, soc, plating })
}

/// Uniform state at a given SOC: anode stoichiometry interpolates its window,
/// the cathode follows by exact lithium balance from its 0%-SOC reference,
/// electrolyte at the initial concentration.
pub fn initial_state(model: &CellModel, soc: f64) -> Vec<f64> {
    let l = &model.layout;
    let p = &model.params;
    let x = p.stoich_0pct + soc * (p.stoich_100pct - p.stoich_0pct);
    let li_swing = (p.stoich_100pct - p.stoich_0pct)
        * (p.anode.thickness * p.anode.eps_s * p.anode.cs_max)
        / (p.cathode.thickness * p.cathode.eps_s * p.cathode.cs_max);
    let y = p.cathode_stoich_soc0 - soc * li_swing;
    let mut h_d = vec![0.0; l.n_differential()];
    for ix in 0..l.n_x_a {
        for ir in 0..l.n_r {
            h_d[l.cs_index(Side::Anode, ix, ir)] = x * p.anode.cs_max;
        }
    }
    for ix in 0..l.n_x_c {
        for ir in 0..l.n_r {
            h_d[l.cs_index(Side::Cathode, ix, ir)] = y * p.cathode.cs_max;
        }
    }
    for k in l.n_solid()..l.n_differential() {
        h_d[k] = p.c_e_init;
    }
    h_d
}

/// Total lithium per unit cell area (mol/m^2): electrolyte inventory plus
/// the active-material inventory through the particle averages. Conserved by
/// the discrete right-hand side whenever the conservation residual vanishes.
pub fn total_lithium<S: Scalar>(model: &CellModel, h_d: &[S]) -> Result<S> {
    let l = &model.layout;
    let p = &model.params;
    let mut total = S::zero();
    // electrolyte: sum over domains with interface twins counted per domain
    for dom in [Domain::Anode, Domain::Separator, Domain::Cathode] {
        let g = model.grids.domain(dom);
        let eps = p.eps_e(dom);
        let vals: Vec<S> =
            (0..l.n_x_domain(dom)).map(|ix| h_d[l.ce_index(dom, ix)]).collect();
        total += g.integrate(&vals)? * eps;
    }
    // solid: eps_s times the particle volume average, integrated in x
    for side in [Side::Anode, Side::Cathode] {
        let e = p.electrode(side);
        let gx = model.grids.electrode_x(side);
        let gr = model.grids.radial(side);
        let r3 = e.radius.powi(3);
        let per_x: Vec<S> = (0..l.n_x(side))
            .map(|ix| {
                let base = l.cs_index(side, ix, 0);
                let mut acc = S::zero();
                for ir in 0..l.n_r {
                    let r = gr.nodes[ir];
                    acc += h_d[base + ir] * (gr.quad_weights[ir] * r * r);
                }
                acc * (3.0 * e.eps_s / r3)
            })
            .collect();
        total += gx.integrate(&per_x)?;
    }
    Ok(total)
}
