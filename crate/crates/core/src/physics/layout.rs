//! Flat state-vector layout for the discretized cell model.
//!
//! Differential states `h_d` hold solid concentrations (per electrode x-node,
//! per radial node) followed by electrolyte concentrations (anode, separator,
//! cathode nodes in order). Domain-interface electrolyte nodes are stored once
//! per adjacent domain as twin entries that are kept exactly equal by the
//! right-hand side. Algebraic variables `h_z` are the interfacial molar
//! fluxes at the electrode x-nodes.

use super::params::{Domain, Side};

/// Index bookkeeping between flat vectors and (domain, x, r) identities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateLayout {
    pub n_x_a: usize,
    pub n_x_s: usize,
    pub n_x_c: usize,
    pub n_r: usize,
}

impl StateLayout {
    pub fn new(n_x_a: usize, n_x_s: usize, n_x_c: usize, n_r: usize) -> Self {
        StateLayout { n_x_a, n_x_s, n_x_c, n_r }
    }

    pub fn n_x(&self, side: Side) -> usize {
        match side {
            Side::Anode => self.n_x_a,
            Side::Cathode => self.n_x_c,
        }
    }

    pub fn n_x_domain(&self, dom: Domain) -> usize {
        match dom {
            Domain::Anode => self.n_x_a,
            Domain::Separator => self.n_x_s,
            Domain::Cathode => self.n_x_c,
        }
    }

    /// Number of solid-concentration states.
    pub fn n_solid(&self) -> usize {
        (self.n_x_a + self.n_x_c) * self.n_r
    }

    /// Number of electrolyte states (interface twins counted per domain).
    pub fn n_elyte(&self) -> usize {
        self.n_x_a + self.n_x_s + self.n_x_c
    }

    /// Total differential states.
    pub fn n_differential(&self) -> usize {
        self.n_solid() + self.n_elyte()
    }

    /// Total algebraic variables (fluxes at electrode x-nodes).
    pub fn n_algebraic(&self) -> usize {
        self.n_x_a + self.n_x_c
    }

    /// Flat index of C_s at (`side`, x-node `ix`, radial node `ir`).
    pub fn cs_index(&self, side: Side, ix: usize, ir: usize) -> usize {
        debug_assert!(ix < self.n_x(side) && ir < self.n_r);
        match side {
            Side::Anode => ix * self.n_r + ir,
            Side::Cathode => (self.n_x_a + ix) * self.n_r + ir,
        }
    }

    /// Flat index of C_e at (`dom`, node `ix` within the domain).
    pub fn ce_index(&self, dom: Domain, ix: usize) -> usize {
        debug_assert!(ix < self.n_x_domain(dom));
        let base = self.n_solid();
        match dom {
            Domain::Anode => base + ix,
            Domain::Separator => base + self.n_x_a + ix,
            Domain::Cathode => base + self.n_x_a + self.n_x_s + ix,
        }
    }

    /// Index of C_e within the electrolyte block only (no solid offset).
    pub fn ce_local(&self, dom: Domain, ix: usize) -> usize {
        self.ce_index(dom, ix) - self.n_solid()
    }

    /// Flat index of the flux j at (`side`, x-node `ix`) within `h_z`.
    pub fn j_index(&self, side: Side, ix: usize) -> usize {
        debug_assert!(ix < self.n_x(side));
        match side {
            Side::Anode => ix,
            Side::Cathode => self.n_x_a + ix,
        }
    }

    /// Twin electrolyte index pairs (anode/separator and separator/cathode
    /// interfaces), as flat `h_d` indices.
    pub fn ce_twin_pairs(&self) -> [(usize, usize); 2] {
        [
            (self.ce_index(Domain::Anode, self.n_x_a - 1), self.ce_index(Domain::Separator, 0)),
            (self.ce_index(Domain::Separator, self.n_x_s - 1), self.ce_index(Domain::Cathode, 0)),
        ]
    }

    /// Surface (r = R) solid index for (`side`, `ix`).
    pub fn cs_surface_index(&self, side: Side, ix: usize) -> usize {
        self.cs_index(side, ix, self.n_r - 1)
    }
}

/// Differential + algebraic state snapshot in physical units.
#[derive(Clone, Debug)]
pub struct StateVector {
    /// Solid and electrolyte concentrations (mol/m^3), layout order.
    pub h_d: Vec<f64>,
    /// Interfacial molar fluxes (mol/(m^2 s)), layout order.
    pub h_z: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_published_configurations() {
        let truth = StateLayout::new(7, 4, 7, 8);
        assert_eq!(truth.n_differential(), 130);
        assert_eq!(truth.n_algebraic(), 14);
        let reduced = StateLayout::new(5, 2, 5, 7);
        assert_eq!(reduced.n_differential(), 82);
        assert_eq!(reduced.n_algebraic(), 10);
    }

    #[test]
    fn index_maps_are_bijections() {
        let l = StateLayout::new(3, 2, 4, 5);
        let mut seen = vec![false; l.n_differential()];
        for side in [Side::Anode, Side::Cathode] {
            for ix in 0..l.n_x(side) {
                for ir in 0..l.n_r {
                    let i = l.cs_index(side, ix, ir);
                    assert!(!seen[i], "duplicate index {i}");
                    seen[i] = true;
                }
            }
        }
        for dom in [Domain::Anode, Domain::Separator, Domain::Cathode] {
            for ix in 0..l.n_x_domain(dom) {
                let i = l.ce_index(dom, ix);
                assert!(!seen[i], "duplicate index {i}");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));

        let mut seen_z = vec![false; l.n_algebraic()];
        for side in [Side::Anode, Side::Cathode] {
            for ix in 0..l.n_x(side) {
                let i = l.j_index(side, ix);
                assert!(!seen_z[i]);
                seen_z[i] = true;
            }
        }
        assert!(seen_z.iter().all(|&s| s));
    }

    #[test]
    fn twin_pairs_are_adjacent_domain_endpoints() {
        let l = StateLayout::new(3, 2, 4, 5);
        let [(a, b), (c, d)] = l.ce_twin_pairs();
        assert_eq!(a, l.ce_index(Domain::Anode, 2));
        assert_eq!(b, l.ce_index(Domain::Separator, 0));
        assert_eq!(c, l.ce_index(Domain::Separator, 1));
        assert_eq!(d, l.ce_index(Domain::Cathode, 0));
    }
}
