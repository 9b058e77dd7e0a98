//! Cell parameters: geometry, transport, kinetics, and fitted property
//! functions. Values are config-driven; the repository ships a documented
//! default set assembled from the open literature for a 21700-class cell.

use crate::error::CoreError;
use crate::scalar::Scalar;
use crate::Result;

/// Electrode side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Anode,
    Cathode,
}

/// Cell domain along the thickness direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Anode,
    Separator,
    Cathode,
}

/// Power-series property function of electrolyte concentration,
/// `f(c) = sum_k coef_k * u^pow_k` with `u = c / c_ref`.
#[derive(Clone, Debug)]
pub struct PowerSeries {
    pub c_ref: f64,
    /// (exponent, coefficient) pairs.
    pub terms: Vec<(f64, f64)>,
}

impl PowerSeries {
    pub fn constant(v: f64) -> Self {
        PowerSeries { c_ref: 1.0, terms: vec![(0.0, v)] }
    }

    pub fn eval<S: Scalar>(&self, c: S) -> S {
        let u = c / self.c_ref;
        let mut acc = S::zero();
        for &(p, a) in &self.terms {
            let t = if p == 0.0 {
                S::from_f64(a)
            } else if p == 1.0 {
                u * a
            } else if p == 2.0 {
                u * u * a
            } else if p == 3.0 {
                u * u * u * a
            } else {
                u.powf(p) * a
            };
            acc += t;
        }
        acc
    }

    /// d f / d c, analytic.
    pub fn deriv<S: Scalar>(&self, c: S) -> S {
        let u = c / self.c_ref;
        let mut acc = S::zero();
        for &(p, a) in &self.terms {
            if p == 0.0 {
                continue;
            }
            let t = if p == 1.0 {
                S::from_f64(a)
            } else if p == 2.0 {
                u * (2.0 * a)
            } else if p == 3.0 {
                u * u * (3.0 * a)
            } else {
                u.powf(p - 1.0) * (a * p)
            };
            acc += t;
        }
        acc / self.c_ref
    }
}

/// Equilibrium-potential table: cubic spline over stoichiometry in [0, 1],
/// linearly extended beyond the table with the end slopes.
#[derive(Clone, Debug)]
pub struct OcpTable {
    xs: Vec<f64>,
    /// Per-segment cubic coefficients (a, b, c, d): y = a + b t + c t^2 + d t^3.
    segs: Vec<[f64; 4]>,
}

impl OcpTable {
    /// Natural cubic spline through `(x, y)` pairs with strictly increasing x.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(CoreError::invalid("ocp table needs at least 2 points"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(CoreError::invalid("ocp table abscissae must be strictly increasing"));
            }
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        // Second derivatives from the natural-spline tridiagonal system.
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut sub = vec![0.0; n - 2];
            let mut diag = vec![0.0; n - 2];
            let mut sup = vec![0.0; n - 2];
            let mut rhs = vec![0.0; n - 2];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                sub[i - 1] = h0;
                diag[i - 1] = 2.0 * (h0 + h1);
                sup[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            // Thomas algorithm
            for i in 1..n - 2 {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 2] = rhs[n - 3] / diag[n - 3];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i - 1] - sup[i - 1] * m[i]) / diag[i - 1];
            }
        }
        let mut segs = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let h = xs[i + 1] - xs[i];
            let a = ys[i];
            let b = (ys[i + 1] - ys[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
            let c = m[i] / 2.0;
            let d = (m[i + 1] - m[i]) / (6.0 * h);
            segs.push([a, b, c, d]);
        }
        Ok(OcpTable { xs, segs })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.segs.len() - 1),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.segs.len() - 1),
        }
    }

    /// phi_eq(stoichiometry), volts.
    pub fn eval<S: Scalar>(&self, s: S) -> S {
        let x = s.value();
        let lo = self.xs[0];
        let hi = *self.xs.last().unwrap();
        if x < lo {
            let d = self.deriv_at(lo);
            return (s - lo) * d + self.value_at(lo);
        }
        if x > hi {
            let d = self.deriv_at(hi);
            return (s - hi) * d + self.value_at(hi);
        }
        let k = self.segment(x);
        let [a, b, c, d] = self.segs[k];
        let t = s - self.xs[k];
        ((t * d + c) * t + b) * t + a
    }

    /// d phi_eq / d stoichiometry.
    pub fn deriv<S: Scalar>(&self, s: S) -> S {
        let x = s.value();
        let lo = self.xs[0];
        let hi = *self.xs.last().unwrap();
        if x < lo {
            return S::from_f64(self.deriv_at(lo));
        }
        if x > hi {
            return S::from_f64(self.deriv_at(hi));
        }
        let k = self.segment(x);
        let [_, b, c, d] = self.segs[k];
        let t = s - self.xs[k];
        (t * (3.0 * d) + 2.0 * c) * t + b
    }

    fn value_at(&self, x: f64) -> f64 {
        self.eval::<f64>(x)
    }

    fn deriv_at(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let [_, b, c, d] = self.segs[k];
        let t = x - self.xs[k];
        b + 2.0 * c * t + 3.0 * d * t * t
    }
}

/// Per-electrode parameters.
#[derive(Clone, Debug)]
pub struct ElectrodeParams {
    /// Solid diffusivity (m^2/s).
    pub d_s: f64,
    /// Particle radius (m).
    pub radius: f64,
    /// Maximum solid concentration (mol/m^3).
    pub cs_max: f64,
    /// Reaction rate constant; i0 = F * k0 * sqrt((cs_max - cs) * cs * ce).
    pub k0: f64,
    /// Specific interfacial area, 3 eps_s / R (1/m).
    pub a_s: f64,
    /// Effective solid conductivity (S/m).
    pub sigma_eff: f64,
    /// Electrode thickness (m).
    pub thickness: f64,
    /// Film resistance (ohm m^2).
    pub r_sei: f64,
    /// Active material volume fraction.
    pub eps_s: f64,
    /// Electrolyte volume fraction in this electrode.
    pub eps_e: f64,
    /// Equilibrium potential vs stoichiometry.
    pub ocp: OcpTable,
}

/// Full parameter set of the cell model.
#[derive(Clone, Debug)]
pub struct CellParameters {
    pub anode: ElectrodeParams,
    pub cathode: ElectrodeParams,
    pub sep_thickness: f64,
    pub sep_eps_e: f64,
    /// Bulk electrolyte diffusivity D_e(c_e) (m^2/s); effective value scales
    /// by eps_e^bruggeman per domain.
    pub d_e: PowerSeries,
    /// Bulk ionic conductivity kappa(c_e) (S/m); same Bruggeman scaling.
    pub kappa: PowerSeries,
    pub bruggeman: f64,
    /// Transference number.
    pub t_plus: f64,
    /// Temperature (K), constant.
    pub temperature: f64,
    /// Initial/reference electrolyte concentration (mol/m^3).
    pub c_e_init: f64,
    /// Current density corresponding to 1C (A/m^2). Sign convention:
    /// positive applied current lithiates the anode (state of charge rises).
    pub current_1c: f64,
    /// Anode stoichiometry at 0% and 100% SOC.
    pub stoich_0pct: f64,
    pub stoich_100pct: f64,
    /// Cathode stoichiometry at 0% SOC (anode-window lithium balance fixes
    /// the rest).
    pub cathode_stoich_soc0: f64,
    pub faraday: f64,
    pub gas_constant: f64,
    pub boltzmann: f64,
    /// Floor for the exchange current inside the asinh inverse (A/m^2).
    pub i0_floor: f64,
    /// Floor for electrolyte concentration inside logarithms (mol/m^3).
    pub ce_floor: f64,
}

impl CellParameters {
    pub fn electrode(&self, side: Side) -> &ElectrodeParams {
        match side {
            Side::Anode => &self.anode,
            Side::Cathode => &self.cathode,
        }
    }

    pub fn eps_e(&self, dom: Domain) -> f64 {
        match dom {
            Domain::Anode => self.anode.eps_e,
            Domain::Separator => self.sep_eps_e,
            Domain::Cathode => self.cathode.eps_e,
        }
    }

    pub fn domain_thickness(&self, dom: Domain) -> f64 {
        match dom {
            Domain::Anode => self.anode.thickness,
            Domain::Separator => self.sep_thickness,
            Domain::Cathode => self.cathode.thickness,
        }
    }

    /// Effective electrolyte diffusivity in a domain.
    pub fn d_e_eff<S: Scalar>(&self, dom: Domain, c: S) -> S {
        self.d_e.eval(c) * self.eps_e(dom).powf(self.bruggeman)
    }

    pub fn d_e_eff_deriv<S: Scalar>(&self, dom: Domain, c: S) -> S {
        self.d_e.deriv(c) * self.eps_e(dom).powf(self.bruggeman)
    }

    /// Effective ionic conductivity in a domain.
    pub fn kappa_eff<S: Scalar>(&self, dom: Domain, c: S) -> S {
        self.kappa.eval(c) * self.eps_e(dom).powf(self.bruggeman)
    }

    /// MacInnes diffusional-overpotential coefficient, 2(1-t+) R T / F (V).
    pub fn macinnes_coeff(&self) -> f64 {
        2.0 * (1.0 - self.t_plus) * self.gas_constant * self.temperature / self.faraday
    }

    /// Characteristic uniform flux for 1C in an electrode (mol/(m^2 s)).
    pub fn flux_1c(&self, side: Side) -> f64 {
        let e = self.electrode(side);
        self.current_1c / (e.a_s * self.faraday * e.thickness)
    }

    /// Validate the invariants documented for the parameter set.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("anode.d_s", self.anode.d_s),
            ("anode.radius", self.anode.radius),
            ("anode.cs_max", self.anode.cs_max),
            ("anode.k0", self.anode.k0),
            ("anode.thickness", self.anode.thickness),
            ("anode.sigma_eff", self.anode.sigma_eff),
            ("cathode.d_s", self.cathode.d_s),
            ("cathode.radius", self.cathode.radius),
            ("cathode.cs_max", self.cathode.cs_max),
            ("cathode.k0", self.cathode.k0),
            ("cathode.thickness", self.cathode.thickness),
            ("cathode.sigma_eff", self.cathode.sigma_eff),
            ("sep_thickness", self.sep_thickness),
            ("temperature", self.temperature),
            ("c_e_init", self.c_e_init),
            ("current_1c", self.current_1c),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(CoreError::invalid(format!("parameter {name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.t_plus) {
            return Err(CoreError::invalid(format!("t_plus must be in [0,1], got {}", self.t_plus)));
        }
        if self.stoich_0pct >= self.stoich_100pct {
            return Err(CoreError::invalid("stoich_0pct must be below stoich_100pct"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_series_eval_and_derivative() {
        // f(c) = 2 + 3 u + 0.5 u^1.5, u = c/1000
        let f = PowerSeries { c_ref: 1000.0, terms: vec![(0.0, 2.0), (1.0, 3.0), (1.5, 0.5)] };
        let c = 800.0;
        let u: f64 = 0.8;
        assert!((f.eval(c) - (2.0 + 3.0 * u + 0.5 * u.powf(1.5))).abs() < 1e-14);
        let h = 1e-4;
        let fd = (f.eval(c + h) - f.eval(c - h)) / (2.0 * h);
        assert!((f.deriv(c) - fd).abs() < 1e-10);
    }

    #[test]
    fn spline_reproduces_cubic_exactly_inside() {
        // natural spline is exact for data from a linear function
        let pts: Vec<(f64, f64)> = (0..11).map(|i| (i as f64 / 10.0, 1.0 - 0.3 * i as f64 / 10.0)).collect();
        let t = OcpTable::new(&pts).unwrap();
        for &x in &[0.05, 0.33, 0.77, 0.99] {
            assert!((t.eval(x) - (1.0 - 0.3 * x)).abs() < 1e-12);
            assert!((t.deriv(x) + 0.3).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_interpolates_nodes_and_extends_linearly() {
        let pts = vec![(0.0, 1.0), (0.5, 0.4), (1.0, 0.1)];
        let t = OcpTable::new(&pts).unwrap();
        for (x, y) in &pts {
            assert!((t.eval(*x) - y).abs() < 1e-12);
        }
        // Beyond the table: linear with the end slope (no curvature)
        let d_hi = t.deriv(1.0);
        assert!((t.eval(1.2) - (0.1 + 0.2 * d_hi)).abs() < 1e-12);
        let d_lo = t.deriv(0.0);
        assert!((t.eval(-0.1) - (1.0 - 0.1 * d_lo)).abs() < 1e-12);
    }

    #[test]
    fn spline_derivative_matches_fd() {
        let pts: Vec<(f64, f64)> =
            (0..21).map(|i| { let x = i as f64 / 20.0; (x, (3.0 * x).sin() + x * x) }).collect();
        let t = OcpTable::new(&pts).unwrap();
        for &x in &[0.11, 0.43, 0.86] {
            let h = 1e-6;
            let fd = (t.eval(x + h) - t.eval(x - h)) / (2.0 * h);
            assert!((t.deriv(x) - fd).abs() < 1e-8);
        }
    }
}
