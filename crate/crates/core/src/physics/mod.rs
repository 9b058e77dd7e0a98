//! The discretized P2D cell model: state layout, constitutive relations,
//! potential-field reconstruction via integration constants, the dynamic
//! right-hand side, the charge-conservation residual, and the output map.

pub mod fields;
pub mod layout;
pub mod outputs;
pub mod params;
pub mod rhs;

pub use fields::{algebraic_residual, g_conservation, reconstruct_fields, FieldReconstruction};
pub use layout::{StateLayout, StateVector};
pub use outputs::{cell_outputs, initial_state, total_lithium, Outputs};
pub use params::{CellParameters, Domain, ElectrodeParams, OcpTable, PowerSeries, Side};
pub use rhs::f_rhs;

use crate::error::CoreError;
use crate::grid::{chebyshev_grid, CollocationGrid};
use crate::linalg::Mat;
use crate::scalar::{safe_ops::rectified_sqrt, Scalar};
use crate::Result;

/// Collocation grids for the three thickness domains and the two particle
/// radial domains.
#[derive(Clone, Debug)]
pub struct CellGrids {
    pub anode_x: CollocationGrid,
    pub sep_x: CollocationGrid,
    pub cathode_x: CollocationGrid,
    pub anode_r: CollocationGrid,
    pub cathode_r: CollocationGrid,
}

impl CellGrids {
    pub fn domain(&self, dom: Domain) -> &CollocationGrid {
        match dom {
            Domain::Anode => &self.anode_x,
            Domain::Separator => &self.sep_x,
            Domain::Cathode => &self.cathode_x,
        }
    }

    pub fn electrode_x(&self, side: Side) -> &CollocationGrid {
        match side {
            Side::Anode => &self.anode_x,
            Side::Cathode => &self.cathode_x,
        }
    }

    pub fn radial(&self, side: Side) -> &CollocationGrid {
        match side {
            Side::Anode => &self.anode_r,
            Side::Cathode => &self.cathode_r,
        }
    }
}

/// Parameters, grids, layout and the precomputed linear operators of one
/// discretized cell. Immutable after construction.
#[derive(Clone, Debug)]
pub struct CellModel {
    pub params: CellParameters,
    pub grids: CellGrids,
    pub layout: StateLayout,
    /// Radial diffusion operator per electrode: dc/dt = a * c + b * j.
    pub(crate) radial_a: [Mat<f64>; 2],
    pub(crate) radial_b: [Vec<f64>; 2],
    /// Constant flux-coupling matrix: the columns give the contribution of
    /// each algebraic variable to the differential right-hand side.
    pub(crate) b_coupling: Mat<f64>,
}

impl CellModel {
    /// Build a model with `n_x` nodes per electrode, `n_x_sep` separator
    /// nodes and `n_r` radial nodes.
    pub fn new(params: CellParameters, n_x: usize, n_x_sep: usize, n_r: usize) -> Result<Self> {
        Self::with_layout(params, StateLayout::new(n_x, n_x_sep, n_x, n_r))
    }

    pub fn with_layout(params: CellParameters, layout: StateLayout) -> Result<Self> {
        params.validate()?;
        if layout.n_r < 3 {
            return Err(CoreError::invalid("need at least 3 radial nodes"));
        }
        let da = params.anode.thickness;
        let ds = params.sep_thickness;
        let dc = params.cathode.thickness;
        let grids = CellGrids {
            anode_x: chebyshev_grid(layout.n_x_a, 0.0, da)?,
            sep_x: chebyshev_grid(layout.n_x_s, da, da + ds)?,
            cathode_x: chebyshev_grid(layout.n_x_c, da + ds, da + ds + dc)?,
            anode_r: chebyshev_grid(layout.n_r, 0.0, params.anode.radius)?,
            cathode_r: chebyshev_grid(layout.n_r, 0.0, params.cathode.radius)?,
        };
        let radial_anode = rhs::build_radial_operator(&grids.anode_r, params.anode.d_s);
        let radial_cathode = rhs::build_radial_operator(&grids.cathode_r, params.cathode.d_s);
        let mut model = CellModel {
            params,
            grids,
            layout,
            radial_a: [radial_anode.0, radial_cathode.0],
            radial_b: [radial_anode.1, radial_cathode.1],
            b_coupling: Mat::zeros(0, 0),
        };
        model.b_coupling = rhs::build_flux_coupling(&model);
        Ok(model)
    }

    pub(crate) fn radial_op(&self, side: Side) -> (&Mat<f64>, &[f64]) {
        match side {
            Side::Anode => (&self.radial_a[0], &self.radial_b[0]),
            Side::Cathode => (&self.radial_a[1], &self.radial_b[1]),
        }
    }

    /// Electrolyte slice of a differential state vector.
    pub fn ce_block<'a, S>(&self, h_d: &'a [S]) -> &'a [S] {
        &h_d[self.layout.n_solid()..]
    }

    /// Surface solid concentrations at the electrode x-nodes, `h_z` order.
    pub fn cs_surface<S: Scalar>(&self, h_d: &[S]) -> Vec<S> {
        let l = &self.layout;
        let mut out = Vec::with_capacity(l.n_algebraic());
        for side in [Side::Anode, Side::Cathode] {
            for ix in 0..l.n_x(side) {
                out.push(h_d[l.cs_surface_index(side, ix)]);
            }
        }
        out
    }

    /// Electrolyte concentration at the electrode x-nodes, `h_z` order.
    pub fn ce_at_electrodes<S: Scalar>(&self, h_d: &[S]) -> Vec<S> {
        let l = &self.layout;
        let mut out = Vec::with_capacity(l.n_algebraic());
        for ix in 0..l.n_x_a {
            out.push(h_d[l.ce_index(Domain::Anode, ix)]);
        }
        for ix in 0..l.n_x_c {
            out.push(h_d[l.ce_index(Domain::Cathode, ix)]);
        }
        out
    }
}

/// Symmetric exchange current density, `i0 = F k0 sqrt((cs_max - cs) cs ce)`
/// with the rectified square root absorbing negative round-off (A/m^2).
pub fn exchange_current<S: Scalar>(cs_surf: S, ce: S, side: Side, p: &CellParameters) -> S {
    let e = p.electrode(side);
    let arg = (-cs_surf + e.cs_max) * cs_surf * ce;
    rectified_sqrt(arg) * (p.faraday * e.k0)
}

/// Butler–Volmer molar flux, `j = (2 i0 / F) sinh(F eta / (2 R T))`.
pub fn bv_flux<S: Scalar>(i0: S, eta: S, t_kelvin: f64, p: &CellParameters) -> S {
    let arg = eta * (p.faraday / (2.0 * p.gas_constant * t_kelvin));
    i0 * arg.sinh() * (2.0 / p.faraday)
}

/// Charge-transfer overpotential from the flux,
/// `eta = (2 R T / F) asinh(F j / (2 i0))`; the exact inverse of [`bv_flux`]
/// in its second argument. `i0` is floored at `p.i0_floor` to keep the
/// inverse bounded at stoichiometry extremes; floors are logged.
pub fn overpotential_from_flux<S: Scalar>(j: S, i0: S, t_kelvin: f64, p: &CellParameters) -> S {
    let i0 = if i0.value() < p.i0_floor {
        log::debug!("exchange current {:.3e} floored to {:.3e}", i0.value(), p.i0_floor);
        S::from_f64(p.i0_floor)
    } else {
        i0
    };
    let arg = j * (p.faraday / 2.0) / i0;
    arg.asinh() * (2.0 * p.gas_constant * t_kelvin / p.faraday)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::params::*;
    use super::CellModel;

    /// Compact literature-flavored parameter set for unit tests (same
    /// structure as the shipped config, coarser OCP tables).
    pub fn test_params() -> CellParameters {
        let ocp_a = OcpTable::new(
            &(0..41)
                .map(|i| {
                    let x = i as f64 / 40.0;
                    let v = 1.9793 * (-39.3631 * x).exp() + 0.2482
                        - 0.0909 * (29.8538 * (x - 0.1234)).tanh()
                        - 0.04478 * (14.9159 * (x - 0.2769)).tanh()
                        - 0.0205 * (30.4444 * (x - 0.6103)).tanh();
                    (x, v)
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let ocp_c = OcpTable::new(
            &(0..41)
                .map(|i| {
                    let y = i as f64 / 40.0;
                    let v = -0.8090 * y + 4.4875
                        - 0.0428 * (18.5138 * (y - 0.5542)).tanh()
                        - 17.7326 * (15.7890 * (y - 0.3117)).tanh()
                        + 17.5842 * (15.9308 * (y - 0.3120)).tanh();
                    (y, v)
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let brug: f64 = 1.5;
        let anode = ElectrodeParams {
            d_s: 3.3e-14,
            radius: 5.86e-6,
            cs_max: 33133.0,
            k0: 6.716e-12,
            a_s: 3.0 * 0.75 / 5.86e-6,
            sigma_eff: 215.0 * 0.75f64.powf(brug),
            thickness: 85.2e-6,
            r_sei: 1.0e-3,
            eps_s: 0.75,
            eps_e: 0.25,
            ocp: ocp_a,
        };
        let cathode = ElectrodeParams {
            d_s: 4.0e-15,
            radius: 5.22e-6,
            cs_max: 63104.0,
            k0: 3.545e-11,
            a_s: 3.0 * 0.665 / 5.22e-6,
            sigma_eff: 0.18 * 0.665f64.powf(brug),
            thickness: 75.6e-6,
            r_sei: 1.0e-3,
            eps_s: 0.665,
            eps_e: 0.335,
            ocp: ocp_c,
        };
        CellParameters {
            anode,
            cathode,
            sep_thickness: 12.0e-6,
            sep_eps_e: 0.47,
            d_e: PowerSeries {
                c_ref: 1000.0,
                terms: vec![(0.0, 4.862e-10), (1.0, -3.972e-10), (2.0, 8.794e-11)],
            },
            kappa: PowerSeries {
                c_ref: 1000.0,
                terms: vec![(1.0, 3.329), (1.5, -2.51), (3.0, 0.1297)],
            },
            bruggeman: brug,
            t_plus: 0.2594,
            temperature: 298.15,
            c_e_init: 1000.0,
            current_1c: 50.0,
            stoich_0pct: 0.026,
            stoich_100pct: 0.911,
            cathode_stoich_soc0: 0.9084,
            faraday: 96485.33212,
            gas_constant: 8.314462618,
            boltzmann: 1.380649e-23,
            i0_floor: 1.0e-6,
            ce_floor: 1.0,
        }
    }

    pub fn truth_model() -> CellModel {
        CellModel::new(test_params(), 7, 4, 8).unwrap()
    }

    pub fn reduced_model() -> CellModel {
        CellModel::new(test_params(), 5, 2, 7).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::test_params;
    use super::*;

    #[test]
    fn exchange_current_vanishes_at_lattice_limits() {
        let p = test_params();
        assert_eq!(exchange_current(0.0, 1000.0, Side::Anode, &p), 0.0);
        assert_eq!(exchange_current(p.anode.cs_max, 1000.0, Side::Anode, &p), 0.0);
    }

    #[test]
    fn exchange_current_half_lattice_value() {
        let p = test_params();
        let half = p.anode.cs_max / 2.0;
        let got = exchange_current(half, 1000.0, Side::Anode, &p);
        let want = p.faraday * p.anode.k0 * (p.anode.cs_max * p.anode.cs_max / 4.0 * 1000.0).sqrt();
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn bv_flux_equilibrium_and_antisymmetry() {
        let p = test_params();
        let t = p.temperature;
        assert_eq!(bv_flux(0.7, 0.0, t, &p), 0.0);
        for eta in [1e-3, 0.01, 0.1] {
            let a = bv_flux(0.7, eta, t, &p);
            let b = bv_flux(0.7, -eta, t, &p);
            assert!((a + b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bv_flux_unit_argument() {
        let p = test_params();
        let eta = 2.0 * p.gas_constant * p.temperature / p.faraday;
        let got = bv_flux(1.0, eta, p.temperature, &p);
        let want = 2.0 / p.faraday * 1.0f64.sinh();
        assert!((got - want).abs() < 1e-18);
    }

    #[test]
    fn overpotential_inverts_bv_flux() {
        let p = test_params();
        let t = p.temperature;
        for i0 in [0.05, 0.3, 2.0] {
            for eta in [-0.2, -0.01, 0.0, 0.004, 0.15] {
                let j = bv_flux(i0, eta, t, &p);
                let back = overpotential_from_flux(j, i0, t, &p);
                assert!(
                    (back - eta).abs() <= 1e-12 * eta.abs().max(1e-12),
                    "i0={i0} eta={eta} back={back}"
                );
            }
        }
        // j = 2 i0 / F gives asinh(1)
        let i0 = 0.5;
        let j = 2.0 * i0 / p.faraday;
        let want = 2.0 * p.gas_constant * t / p.faraday * 1.0f64.asinh();
        assert!((overpotential_from_flux(j, i0, t, &p) - want).abs() < 1e-15);
    }

    #[test]
    fn overpotential_floors_tiny_exchange_current() {
        let p = test_params();
        let eta = overpotential_from_flux(1e-5, 1e-12, p.temperature, &p);
        let want = overpotential_from_flux(1e-5, p.i0_floor, p.temperature, &p);
        assert_eq!(eta, want);
        assert!(eta.is_finite());
    }
}
