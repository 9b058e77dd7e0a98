//! Supervised comparison models: the state-map surrogate fit on full
//! internal-state snapshots, the time-to-state regression, and its
//! physics-regularized variant.

use crate::error::CoreError;
use crate::linalg::{LuFactor, Mat};
use crate::minn::{trapezoid_weights, AdamW};
use crate::neural::{forward_gradient, mlp_forward, n_params, MlpParams, ScalarObjective};
use crate::physics::{f_rhs, g_conservation, CellModel};
use crate::scalar::{Dual, Scalar, LANES};
use crate::scaling::{state_scales, ScalingSpec};
use crate::solver::Trajectory;
use crate::Result;
use std::io::{BufRead, Write};
use std::path::Path;

/// One sampled record of the ground-truth solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub h_d: Vec<f64>,
    pub h_z: Vec<f64>,
    /// Time derivative of the differential states at the stored state.
    pub h_d_dot: Vec<f64>,
    pub i_app: f64,
    /// Output triple (voltage, SOC, plating potential).
    pub y: Vec<f64>,
}

/// Input-label records for the supervised baselines.
#[derive(Clone, Debug, Default)]
pub struct SnapshotSet {
    pub records: Vec<Snapshot>,
}

impl SnapshotSet {
    /// Build from a solved trajectory; the stored state derivative is the
    /// dynamic right-hand side evaluated at the stored state and root.
    pub fn from_trajectory(model: &CellModel, traj: &Trajectory) -> Result<Self> {
        let mut records = Vec::with_capacity(traj.sample_times.len());
        for k in 0..traj.sample_times.len() {
            let h_d = traj.states[k].clone();
            let h_z = traj.hz[k].clone();
            let h_d_dot = f_rhs(model, &h_d, &h_z)?;
            records.push(Snapshot {
                t: traj.sample_times[k],
                h_d,
                h_z,
                h_d_dot,
                i_app: traj.currents[k],
                y: traj.outputs[k].to_vec(),
            });
        }
        Ok(SnapshotSet { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Drop exact duplicates (same time, same state bits); returns how many
    /// were removed. Duplicates would only reweight the least-squares loss.
    pub fn deduplicate(&mut self) -> usize {
        let before = self.records.len();
        let mut seen: Vec<&Snapshot> = Vec::new();
        let mut keep = Vec::with_capacity(before);
        for r in &self.records {
            if seen.iter().any(|s| **s == *r) {
                continue;
            }
            seen.push(r);
            keep.push(r.clone());
        }
        let removed = before - keep.len();
        self.records = keep;
        removed
    }

    /// Dimensional consistency against a model layout, including the state
    /// derivative check.
    pub fn validate(&self, model: &CellModel, tol: f64) -> Result<()> {
        let l = &model.layout;
        for (k, r) in self.records.iter().enumerate() {
            if r.h_d.len() != l.n_differential() || r.h_z.len() != l.n_algebraic() {
                return Err(CoreError::invalid(format!("snapshot {k}: dimension mismatch")));
            }
            let f = f_rhs(model, &r.h_d, &r.h_z)?;
            let scales = state_scales(model);
            for i in 0..f.len() {
                let diff = (f[i] - r.h_d_dot[i]).abs();
                if diff > tol * (f[i].abs().max(scales[i])) {
                    return Err(CoreError::invalid(format!(
                        "snapshot {k}: stored derivative disagrees with f at component {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Columnar CSV with a layout-descriptor header line.
    pub fn write_csv(&self, model: &CellModel, path: &Path) -> Result<()> {
        let l = &model.layout;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "# layout n_x_a={} n_x_s={} n_x_c={} n_r={}",
            l.n_x_a, l.n_x_s, l.n_x_c, l.n_r
        )?;
        let mut header = vec!["t_s".to_string(), "i_a_m2".to_string()];
        header.extend(["v_volt", "soc", "plating_volt"].map(String::from));
        header.extend((0..l.n_differential()).map(|i| format!("hd{i}")));
        header.extend((0..l.n_algebraic()).map(|i| format!("hz{i}")));
        header.extend((0..l.n_differential()).map(|i| format!("hdot{i}")));
        writeln!(f, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![format!("{:.12e}", r.t), format!("{:.12e}", r.i_app)];
            row.extend(r.y.iter().map(|v| format!("{v:.12e}")));
            row.extend(r.h_d.iter().map(|v| format!("{v:.12e}")));
            row.extend(r.h_z.iter().map(|v| format!("{v:.12e}")));
            row.extend(r.h_d_dot.iter().map(|v| format!("{v:.12e}")));
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(model: &CellModel, path: &Path) -> Result<Self> {
        let l = &model.layout;
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut records = Vec::new();
        for line in file.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("t_s") {
                if let Some(desc) = line.strip_prefix("# layout ") {
                    let expect = format!(
                        "n_x_a={} n_x_s={} n_x_c={} n_r={}",
                        l.n_x_a, l.n_x_s, l.n_x_c, l.n_r
                    );
                    if desc.trim() != expect {
                        return Err(CoreError::invalid(format!(
                            "snapshot layout `{}` does not match model `{expect}`",
                            desc.trim()
                        )));
                    }
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CoreError::invalid(format!("bad snapshot row `{line}`")))?;
            let nd = l.n_differential();
            let nz = l.n_algebraic();
            if vals.len() != 5 + 2 * nd + nz {
                return Err(CoreError::invalid("snapshot row length mismatch"));
            }
            records.push(Snapshot {
                t: vals[0],
                i_app: vals[1],
                y: vals[2..5].to_vec(),
                h_d: vals[5..5 + nd].to_vec(),
                h_z: vals[5 + nd..5 + nd + nz].to_vec(),
                h_d_dot: vals[5 + nd + nz..].to_vec(),
            });
        }
        Ok(SnapshotSet { records })
    }
}

/// Hyperparameters shared by the supervised fits.
#[derive(Clone, Debug)]
pub struct FitConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub chunk: usize,
    /// Gauss-Newton polish after the first-order phase (least-squares
    /// objectives only).
    pub lm_polish: bool,
    pub lm_max_iters: usize,
    /// Stop when the scaled mean-square error falls below this.
    pub target_mse: f64,
    /// Weight of the physics-residual term in the regularized fit.
    pub physical_weight: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 400,
            learning_rate: 2e-3,
            seed: 0,
            hidden: vec![64, 64, 64],
            chunk: 8,
            lm_polish: true,
            lm_max_iters: 60,
            target_mse: 1e-10,
            physical_weight: 1.0,
        }
    }
}

/// Fit progress log.
#[derive(Clone, Debug, Default)]
pub struct FitLog {
    /// (epoch, objective) pairs from the first-order phase.
    pub epochs: Vec<(usize, f64)>,
    pub lm_iters: usize,
    pub final_mse: f64,
    pub reached_target: bool,
    pub notes: Vec<String>,
}

/// Scaled residual interface for least-squares fits.
trait ResidualMap: Sync {
    fn dim(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals<S: Scalar>(&self, theta: &[S]) -> Result<Vec<S>>;
}

/// Mean square of a residual vector.
fn mse<S: Scalar>(res: &[S]) -> S {
    let mut acc = S::zero();
    for r in res {
        acc += *r * *r;
    }
    acc * (1.0 / res.len() as f64)
}

struct MseObjective<'a, R: ResidualMap>(&'a R);

impl<R: ResidualMap> ScalarObjective for MseObjective<'_, R> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<S: Scalar>(&self, theta: &[S]) -> Result<S> {
        Ok(mse(&self.0.residuals(theta)?))
    }
}

/// Dense residual Jacobian by chunked dual sweeps.
fn residual_jacobian<R: ResidualMap>(map: &R, theta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = map.dim();
    let m = map.n_residuals();
    let mut jac = Mat::zeros(m, p);
    let mut res0 = vec![0.0; m];
    let mut start = 0;
    while start < p {
        let width = LANES.min(p - start);
        let mut th: Vec<Dual<LANES>> = theta.iter().map(|&v| Dual::constant(v)).collect();
        for lane in 0..width {
            th[start + lane].dx[lane] = 1.0;
        }
        let res = map.residuals(&th)?;
        for (row, r) in res.iter().enumerate() {
            if start == 0 {
                res0[row] = r.re;
            }
            for lane in 0..width {
                jac[(row, start + lane)] = r.dx[lane];
            }
        }
        start += width;
    }
    Ok((res0, jac))
}

/// Levenberg-Marquardt on a scaled residual map.
fn lm_polish<R: ResidualMap>(
    map: &R,
    theta: &mut Vec<f64>,
    target_mse: f64,
    max_iters: usize,
    log: &mut FitLog,
) -> Result<()> {
    let p = map.dim();
    let mut mu = 1e-4;
    let mut current = mse(&map.residuals(theta)?);
    for _ in 0..max_iters {
        if current <= target_mse {
            break;
        }
        log.lm_iters += 1;
        let (res, jac) = residual_jacobian(map, theta)?;
        let m = res.len();
        // normal equations J^T J + mu I
        let mut a = Mat::zeros(p, p);
        for r in 0..m {
            let row = jac.row(r);
            for i in 0..p {
                let ji = row[i];
                if ji == 0.0 {
                    continue;
                }
                for j in i..p {
                    a[(i, j)] += ji * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                a[(i, j)] = a[(j, i)];
            }
        }
        let mut rhs = vec![0.0; p];
        for r in 0..m {
            let row = jac.row(r);
            for i in 0..p {
                rhs[i] -= row[i] * res[r];
            }
        }
        // adapt the damping until the step reduces the objective
        let mut accepted = false;
        for _ in 0..12 {
            let mut damped = a.clone();
            for i in 0..p {
                damped[(i, i)] += mu * (1.0 + a[(i, i)]);
            }
            let step = match LuFactor::new(damped, "lm normal equations") {
                Ok(lu) => lu.solve(&rhs),
                Err(_) => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            let trial_mse = mse(&map.residuals(&trial)?);
            if trial_mse < current {
                *theta = trial;
                current = trial_mse;
                mu = (mu * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    log.final_mse = current;
    log.reached_target = current <= target_mse;
    Ok(())
}

/// First-order phase shared by all fits.
fn adamw_phase<R: ResidualMap>(
    map: &R,
    theta: &mut Vec<f64>,
    cfg: &FitConfig,
    log: &mut FitLog,
) -> Result<()> {
    let mut opt = AdamW::new(theta.len(), cfg.learning_rate, 0.9, 0.999, 1e-8, 0.0);
    let obj = MseObjective(map);
    for epoch in 0..cfg.epochs {
        let (value, grad) = forward_gradient(&obj, theta, cfg.chunk)?;
        log.epochs.push((epoch, value));
        if value <= cfg.target_mse {
            break;
        }
        opt.step(theta, &grad);
    }
    Ok(())
}

/// State-map surrogate residuals: scaled `[h_d, I] -> h_z` errors.
struct StateMapResiduals<'a> {
    model: &'a CellModel,
    scaling: &'a ScalingSpec,
    sizes: Vec<usize>,
    snaps: &'a SnapshotSet,
}

impl ResidualMap for StateMapResiduals<'_> {
    fn dim(&self) -> usize {
        n_params(&self.sizes)
    }
    fn n_residuals(&self) -> usize {
        self.snaps.len() * self.model.layout.n_algebraic()
    }
    fn residuals<S: Scalar>(&self, theta: &[S]) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(self.n_residuals());
        let fscales = self.scaling.flux_scales(self.model);
        let mut input = Vec::new();
        for r in &self.snaps.records {
            let h_d: Vec<S> = r.h_d.iter().map(|&v| S::from_f64(v)).collect();
            self.scaling.scale_input(self.model, &h_d, r.i_app, &mut input);
            let pred = mlp_forward(&self.sizes, theta, &input)?;
            for (k, p) in pred.iter().enumerate() {
                out.push(*p - r.h_z[k] / fscales[k]);
            }
        }
        Ok(out)
    }
}

/// Supervised fit of the algebraic map `[h_d, I] -> h_z` on full-state
/// snapshots; closed-loop simulation reuses the surrogate simulation path.
/// Training runs until the scaled MSE reaches the target or the budget ends;
/// missing the target is reported in the log, not an error.
pub fn ddrom_fit(
    model: &CellModel,
    scaling: &ScalingSpec,
    snapshots: &SnapshotSet,
    cfg: &FitConfig,
) -> Result<(MlpParams, FitLog)> {
    if snapshots.is_empty() {
        return Err(CoreError::invalid("ddrom_fit: empty snapshot set"));
    }
    let mut snaps = snapshots.clone();
    let mut log = FitLog::default();
    let removed = snaps.deduplicate();
    if removed > 0 {
        log.notes.push(format!(
            "removed {removed} duplicate snapshots (duplicates only reweight the loss)"
        ));
    }
    let l = &model.layout;
    let mut sizes = vec![l.n_differential() + 1];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(l.n_algebraic());
    let map = StateMapResiduals { model, scaling, sizes: sizes.clone(), snaps: &snaps };
    let mut params = MlpParams::init(sizes, cfg.seed)?;
    adamw_phase(&map, &mut params.theta, cfg, &mut log)?;
    if cfg.lm_polish {
        lm_polish(&map, &mut params.theta, cfg.target_mse, cfg.lm_max_iters, &mut log)?;
    } else {
        log.final_mse = mse(&map.residuals(&params.theta)?);
        log.reached_target = log.final_mse <= cfg.target_mse;
    }
    if !log.reached_target {
        log.notes.push(format!(
            "target mse {:.1e} not reached (best {:.3e}); returning best parameters",
            cfg.target_mse, log.final_mse
        ));
        log::warn!("{}", log.notes.last().unwrap());
    }
    Ok((params, log))
}

/// Time-regression residuals: scaled `t -> [h_d, h_z]` errors weighted by
/// the sample spacing, plus optional physics residuals.
struct TimeMapResiduals<'a> {
    model: &'a CellModel,
    scaling: &'a ScalingSpec,
    sizes: Vec<usize>,
    snaps: &'a SnapshotSet,
    dt_sqrt: Vec<f64>,
    physical_weight: f64,
}

impl TimeMapResiduals<'_> {
    fn predict<S: Scalar>(&self, theta: &[S], t: f64) -> Result<(Vec<S>, Vec<S>)> {
        let input = [S::from_f64(t / self.scaling.time_scale)];
        let out = mlp_forward(&self.sizes, theta, &input)?;
        let nd = self.model.layout.n_differential();
        let sscales = state_scales(self.model);
        let fscales = self.scaling.flux_scales(self.model);
        let h_d: Vec<S> = out[..nd].iter().zip(&sscales).map(|(o, s)| *o * *s).collect();
        let h_z: Vec<S> =
            out[nd..].iter().zip(&fscales).map(|(o, s)| *o * *s).collect();
        Ok((h_d, h_z))
    }
}

impl ResidualMap for TimeMapResiduals<'_> {
    fn dim(&self) -> usize {
        n_params(&self.sizes)
    }
    fn n_residuals(&self) -> usize {
        let l = &self.model.layout;
        let base = self.snaps.len() * (l.n_differential() + l.n_algebraic());
        if self.physical_weight > 0.0 {
            base + self.snaps.len() * (l.n_differential() + 2)
        } else {
            base
        }
    }
    fn residuals<S: Scalar>(&self, theta: &[S]) -> Result<Vec<S>> {
        let l = &self.model.layout;
        let sscales = state_scales(self.model);
        let fscales = self.scaling.flux_scales(self.model);
        let mut out = Vec::with_capacity(self.n_residuals());
        for (k, r) in self.snaps.records.iter().enumerate() {
            let w = self.dt_sqrt[k];
            let (h_d, h_z) = self.predict(theta, r.t)?;
            for i in 0..l.n_differential() {
                out.push((h_d[i] - r.h_d[i]) * (w / sscales[i]));
            }
            for i in 0..l.n_algebraic() {
                out.push((h_z[i] - r.h_z[i]) * (w / fscales[i]));
            }
        }
        if self.physical_weight > 0.0 {
            let pw = self.physical_weight.sqrt();
            let rate_scale: Vec<f64> =
                sscales.iter().map(|s| s / self.scaling.time_scale).collect();
            for (k, r) in self.snaps.records.iter().enumerate() {
                let w = self.dt_sqrt[k] * pw;
                let (h_d, h_z) = self.predict(theta, r.t)?;
                let f = f_rhs(self.model, &h_d, &h_z)?;
                for i in 0..l.n_differential() {
                    out.push((f[i] - r.h_d_dot[i]) * (w / rate_scale[i]));
                }
                // |g| enters the least-squares frame through sqrt(|g|),
                // keeping the summed square equal to the absolute residual
                let g = g_conservation(self.model, &h_z, r.i_app)?;
                for c in 0..2 {
                    let scaled = g[c] * (1.0 / self.scaling.g_scale);
                    out.push(scaled.abs().sqrt() * w);
                }
            }
        }
        Ok(out)
    }
}

fn time_map_fit(
    model: &CellModel,
    scaling: &ScalingSpec,
    snapshots: &SnapshotSet,
    cfg: &FitConfig,
    physical_weight: f64,
) -> Result<(MlpParams, FitLog)> {
    if snapshots.is_empty() {
        return Err(CoreError::invalid("fit: empty snapshot set"));
    }
    let l = &model.layout;
    let mut log = FitLog::default();
    let mut sizes = vec![1usize];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(l.n_differential() + l.n_algebraic());
    let times: Vec<f64> = snapshots.records.iter().map(|r| r.t).collect();
    let dt = trapezoid_weights(&times);
    let map = TimeMapResiduals {
        model,
        scaling,
        sizes: sizes.clone(),
        snaps: snapshots,
        dt_sqrt: dt.iter().map(|d| d.sqrt()).collect(),
        physical_weight,
    };
    let mut params = MlpParams::init(sizes, cfg.seed)?;
    adamw_phase(&map, &mut params.theta, cfg, &mut log)?;
    // the physics |g| term is not smooth at zero, so the Gauss-Newton polish
    // only applies to the pure regression
    if cfg.lm_polish && physical_weight == 0.0 {
        lm_polish(&map, &mut params.theta, cfg.target_mse, cfg.lm_max_iters, &mut log)?;
    } else {
        log.final_mse = mse(&map.residuals(&params.theta)?);
        log.reached_target = log.final_mse <= cfg.target_mse;
    }
    Ok((params, log))
}

/// Purely data-driven time regression `t -> [h_d, h_z]` minimizing the
/// spacing-weighted squared error.
pub fn dnn_fit(
    model: &CellModel,
    scaling: &ScalingSpec,
    snapshots: &SnapshotSet,
    cfg: &FitConfig,
) -> Result<(MlpParams, FitLog)> {
    time_map_fit(model, scaling, snapshots, cfg, 0.0)
}

/// Time regression plus the physics-residual loss (dynamics mismatch and
/// conservation violation at the snapshots).
pub fn pinn_fit(
    model: &CellModel,
    scaling: &ScalingSpec,
    snapshots: &SnapshotSet,
    cfg: &FitConfig,
) -> Result<(MlpParams, FitLog)> {
    time_map_fit(model, scaling, snapshots, cfg, cfg.physical_weight)
}

/// Evaluate a time-regression network at arbitrary times.
pub fn time_map_predict(
    model: &CellModel,
    scaling: &ScalingSpec,
    params: &MlpParams,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let map = TimeMapResiduals {
        model,
        scaling,
        sizes: params.layer_sizes.clone(),
        snaps: &EMPTY,
        dt_sqrt: Vec::new(),
        physical_weight: 0.0,
    };
    map.predict(&params.theta, t)
}

static EMPTY: SnapshotSet = SnapshotSet { records: Vec::new() };

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::initial_state;
    use crate::physics::testutil::reduced_model;

    fn tiny_snapshots(model: &CellModel, n: usize) -> SnapshotSet {
        let mut records = Vec::new();
        for k in 0..n {
            let soc = 0.3 + 0.4 * k as f64 / n.max(2) as f64;
            let h_d = initial_state(model, soc);
            let h_z: Vec<f64> =
                (0..model.layout.n_algebraic()).map(|i| 1e-5 * ((i + k) as f64 * 0.37).sin()).collect();
            let h_d_dot = f_rhs(model, &h_d, &h_z).unwrap();
            records.push(Snapshot {
                t: k as f64 * 0.1,
                h_d,
                h_z,
                h_d_dot,
                i_app: 10.0,
                y: vec![3.6, soc, 0.1],
            });
        }
        SnapshotSet { records }
    }

    #[test]
    fn single_snapshot_is_fit_exactly() {
        let model = reduced_model();
        let scaling = ScalingSpec::from_model(&model, 1.0);
        let snaps = tiny_snapshots(&model, 1);
        let cfg = FitConfig {
            hidden: vec![6],
            epochs: 50,
            lm_max_iters: 40,
            target_mse: 1e-12,
            seed: 3,
            ..Default::default()
        };
        let (params, log) = ddrom_fit(&model, &scaling, &snaps, &cfg).unwrap();
        assert!(log.final_mse <= 1e-12, "mse {}", log.final_mse);
        // prediction reproduces the label
        let r = &snaps.records[0];
        let mut input = Vec::new();
        scaling.scale_input(&model, &r.h_d, r.i_app, &mut input);
        let pred = mlp_forward(&params.layer_sizes, &params.theta, &input).unwrap();
        let fs = scaling.flux_scales(&model);
        for (k, p) in pred.iter().enumerate() {
            assert!((p * fs[k] - r.h_z[k]).abs() <= 1e-5 * fs[k]);
        }
    }

    #[test]
    fn duplicates_do_not_change_the_fit() {
        let model = reduced_model();
        let scaling = ScalingSpec::from_model(&model, 1.0);
        let snaps = tiny_snapshots(&model, 3);
        let mut duped = snaps.clone();
        duped.records.extend(snaps.records.iter().cloned());
        let cfg = FitConfig { hidden: vec![4], epochs: 30, lm_max_iters: 10, seed: 1, ..Default::default() };
        let (a, _) = ddrom_fit(&model, &scaling, &snaps, &cfg).unwrap();
        let (b, log_b) = ddrom_fit(&model, &scaling, &duped, &cfg).unwrap();
        assert_eq!(a.theta, b.theta);
        assert!(log_b.notes.iter().any(|n| n.contains("duplicate")));
    }

    #[test]
    fn constant_snapshots_give_constant_time_regression() {
        let model = reduced_model();
        let scaling = ScalingSpec::from_model(&model, 1.0);
        let mut snaps = tiny_snapshots(&model, 1);
        let r0 = snaps.records[0].clone();
        for k in 1..8 {
            let mut r = r0.clone();
            r.t = k as f64 * 0.1;
            snaps.records.push(r);
        }
        let cfg = FitConfig {
            hidden: vec![8],
            epochs: 200,
            lm_max_iters: 50,
            target_mse: 1e-14,
            seed: 5,
            ..Default::default()
        };
        let (params, _) = dnn_fit(&model, &scaling, &snaps, &cfg).unwrap();
        // interpolated and extrapolated times reproduce the constant state
        for &t in &[0.05, 0.33, 0.61] {
            let (h_d, h_z) = time_map_predict(&model, &scaling, &params, t).unwrap();
            let sscales = state_scales(&model);
            for i in 0..h_d.len() {
                assert!(
                    (h_d[i] - r0.h_d[i]).abs() <= 1e-6 * sscales[i],
                    "h_d[{i}] at t={t}"
                );
            }
            let fs = scaling.flux_scales(&model);
            for i in 0..h_z.len() {
                assert!((h_z[i] - r0.h_z[i]).abs() <= 1e-6 * fs[i]);
            }
        }
    }

    #[test]
    fn uniform_weights_reduce_to_plain_mse_scaling() {
        let model = reduced_model();
        let scaling = ScalingSpec::from_model(&model, 1.0);
        let snaps = tiny_snapshots(&model, 5); // uniform dt = 0.1
        let sizes = vec![1, 4, model.layout.n_differential() + model.layout.n_algebraic()];
        let times: Vec<f64> = snaps.records.iter().map(|r| r.t).collect();
        let dt = trapezoid_weights(&times);
        let theta = MlpParams::init(sizes.clone(), 9).unwrap().theta;
        let weighted = TimeMapResiduals {
            model: &model,
            scaling: &scaling,
            sizes: sizes.clone(),
            snaps: &snaps,
            dt_sqrt: dt.iter().map(|d| d.sqrt()).collect(),
            physical_weight: 0.0,
        };
        let unweighted = TimeMapResiduals {
            model: &model,
            scaling: &scaling,
            sizes,
            snaps: &snaps,
            dt_sqrt: vec![1.0; snaps.len()],
            physical_weight: 0.0,
        };
        let lw: f64 = weighted.residuals(&theta).unwrap().iter().map(|r| r * r).sum();
        let lu: f64 = unweighted.residuals(&theta).unwrap().iter().map(|r| r * r).sum();
        // interior weights are exactly 0.1; the two endpoint samples carry
        // half weight, so compare on the interior sum
        let row = model.layout.n_differential() + model.layout.n_algebraic();
        let wres = weighted.residuals(&theta).unwrap();
        let ures = unweighted.residuals(&theta).unwrap();
        let mut sw = 0.0;
        let mut su = 0.0;
        for k in 1..4 {
            for i in 0..row {
                sw += wres[k * row + i] * wres[k * row + i];
                su += ures[k * row + i] * ures[k * row + i];
            }
        }
        assert!((sw - 0.1 * su).abs() <= 1e-12 * su.abs());
        let _ = (lw, lu);
    }

    #[test]
    fn pinn_with_zero_weight_matches_dnn_bitwise() {
        let model = reduced_model();
        let scaling = ScalingSpec::from_model(&model, 1.0);
        let snaps = tiny_snapshots(&model, 4);
        let cfg = FitConfig {
            hidden: vec![4],
            epochs: 15,
            lm_polish: false,
            physical_weight: 0.0,
            seed: 11,
            ..Default::default()
        };
        let (a, log_a) = dnn_fit(&model, &scaling, &snaps, &cfg).unwrap();
        let (b, log_b) = pinn_fit(&model, &scaling, &snaps, &cfg).unwrap();
        assert_eq!(a.theta, b.theta);
        let la: Vec<f64> = log_a.epochs.iter().map(|e| e.1).collect();
        let lb: Vec<f64> = log_b.epochs.iter().map(|e| e.1).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn snapshot_csv_round_trip_and_validation() {
        let model = reduced_model();
        let snaps = tiny_snapshots(&model, 3);
        snaps.validate(&model, 1e-9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snaps.csv");
        snaps.write_csv(&model, &path).unwrap();
        let back = SnapshotSet::read_csv(&model, &path).unwrap();
        assert_eq!(back.len(), snaps.len());
        for (a, b) in back.records.iter().zip(&snaps.records) {
            assert!((a.t - b.t).abs() < 1e-12);
            for (x, y) in a.h_d.iter().zip(&b.h_d) {
                assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
            }
        }
    }
}
