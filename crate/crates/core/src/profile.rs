//! Applied-current profiles: sampled time series with piecewise-constant or
//! piecewise-linear interpolation, CSV round-tripping, and the built-in
//! excitations used for data generation.
//!
//! Sign convention: positive current lithiates the anode (SOC rises).

use crate::error::CoreError;
use crate::Result;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    PiecewiseConstant,
    Linear,
}

/// Sampled applied-current profile (A/m^2) on strictly increasing times.
#[derive(Clone, Debug)]
pub struct CurrentProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
}

impl CurrentProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(CoreError::invalid("profile needs >= 2 aligned samples"));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::invalid("profile times must be strictly increasing"));
            }
        }
        Ok(CurrentProfile { times, values, interp })
    }

    /// Constant current over `[0, t_end]`.
    pub fn constant(value: f64, t_end: f64) -> Self {
        CurrentProfile { times: vec![0.0, t_end], values: vec![value, value], interp: Interp::Linear }
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.times
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.times.len() - 2),
        }
    }

    /// I(t); clamped to the end values outside the span.
    pub fn eval(&self, t: f64) -> f64 {
        let (t0, t1) = self.span();
        if t <= t0 {
            return self.values[0];
        }
        if t >= t1 {
            return *self.values.last().unwrap();
        }
        let k = self.segment(t);
        match self.interp {
            Interp::PiecewiseConstant => self.values[k],
            Interp::Linear => {
                let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
                self.values[k] + s * (self.values[k + 1] - self.values[k])
            }
        }
    }

    /// Value just right of `t` (the incoming segment at a discontinuity).
    pub fn eval_right(&self, t: f64) -> f64 {
        let (t0, t1) = self.span();
        let eps = 1e-12 * (t1 - t0);
        self.eval((t + eps).min(t1))
    }

    /// Slope dI/dt inside the segment containing `t` (zero for the
    /// piecewise-constant mode).
    pub fn rate(&self, t: f64) -> f64 {
        match self.interp {
            Interp::PiecewiseConstant => 0.0,
            Interp::Linear => {
                let k = self.segment(t.clamp(self.span().0, self.span().1));
                (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])
            }
        }
    }

    /// Times where I(t) jumps in value: every interior knot in the
    /// piecewise-constant mode, none in the linear mode.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self.interp {
            Interp::Linear => Vec::new(),
            Interp::PiecewiseConstant => self.times[1..self.times.len() - 1].to_vec(),
        }
    }

    /// `n` equispaced sample times across the span (including both ends).
    pub fn uniform_samples(&self, n: usize) -> Vec<f64> {
        let (t0, t1) = self.span();
        (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
    }

    /// Two-column CSV with an interpolation-mode header flag:
    /// `# interp: linear` followed by `time_s,current_a_per_m2` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mode = match self.interp {
            Interp::PiecewiseConstant => "constant",
            Interp::Linear => "linear",
        };
        writeln!(f, "# interp: {mode}")?;
        writeln!(f, "time_s,current_a_per_m2")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(f, "{t:.9},{v:.9e}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut interp = Interp::Linear;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in f.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(mode) = rest.strip_prefix("interp:") {
                    interp = match mode.trim() {
                        "constant" => Interp::PiecewiseConstant,
                        "linear" => Interp::Linear,
                        other => {
                            return Err(CoreError::invalid(format!(
                                "unknown interpolation mode `{other}`"
                            )))
                        }
                    };
                }
                continue;
            }
            if line.starts_with("time_s") {
                continue;
            }
            let mut parts = line.split(',');
            let t: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CoreError::invalid(format!("profile line {}: bad time", lineno + 1)))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CoreError::invalid(format!("profile line {}: bad current", lineno + 1)))?;
            times.push(t);
            values.push(v);
        }
        CurrentProfile::new(times, values, interp)
    }
}

/// Training excitation: one period of a sinusoid over two seconds, amplitude
/// bounded by 1C, sampled at the 49 snapshot times (piecewise linear).
pub fn sin_1c_2s(i_1c: f64) -> CurrentProfile {
    let n = 49;
    let times: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> =
        times.iter().map(|t| i_1c * (std::f64::consts::PI * t).sin()).collect();
    CurrentProfile::new(times, values, Interp::Linear).expect("static profile")
}

/// Constant 1C charge for the train/extrapolate split.
pub fn charge_1c(i_1c: f64, t_end: f64) -> CurrentProfile {
    CurrentProfile::constant(i_1c, t_end)
}

/// Synthetic drive cycle: a seeded sum of band-limited sinusoids, mean
/// removed, renormalized so the peak magnitude is `max_c_rate` times 1C,
/// sampled at 1 Hz with linear interpolation.
pub fn drive_cycle(i_1c: f64, max_c_rate: f64, t_end: f64, seed: u64) -> CurrentProfile {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_components = 12;
    // periods between 5 s and 60 s, log-spaced with jitter
    let comps: Vec<(f64, f64, f64)> = (0..n_components)
        .map(|k| {
            let frac = k as f64 / (n_components - 1) as f64;
            let period = 5.0 * (60.0f64 / 5.0).powf(frac) * rng.gen_range(0.85..1.15);
            let amp = rng.gen_range(0.3..1.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (period, amp, phase)
        })
        .collect();
    let raw = |t: f64| -> f64 {
        comps
            .iter()
            .map(|(p, a, ph)| a * (std::f64::consts::TAU * t / p + ph).sin())
            .sum::<f64>()
    };
    let n = t_end.round() as usize + 1;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * t_end / (n - 1) as f64).collect();
    let mut values: Vec<f64> = times.iter().map(|&t| raw(t)).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = max_c_rate * i_1c / peak;
    for v in values.iter_mut() {
        *v *= scale;
    }
    CurrentProfile::new(times, values, Interp::Linear).expect("static profile")
}

/// Resolve a built-in profile by name.
pub fn builtin(name: &str, i_1c: f64, seed: u64) -> Option<CurrentProfile> {
    match name {
        "sin-1c-2s" => Some(sin_1c_2s(i_1c)),
        "drive-5c-800s" => Some(drive_cycle(i_1c, 5.0, 800.0, seed)),
        "charge-1c-1200s" => Some(charge_1c(i_1c, 1200.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_and_rate() {
        let p = CurrentProfile::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0], Interp::Linear).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.5), 1.0);
        assert_eq!(p.rate(0.5), 2.0);
        assert_eq!(p.rate(1.5), -2.0);
        assert!(p.discontinuities().is_empty());
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(3.0), 0.0);
    }

    #[test]
    fn piecewise_constant_mode() {
        let p = CurrentProfile::new(vec![0.0, 1.0, 2.0], vec![5.0, -5.0, 0.0], Interp::PiecewiseConstant)
            .unwrap();
        assert_eq!(p.eval(0.99), 5.0);
        assert_eq!(p.eval(1.01), -5.0);
        assert_eq!(p.discontinuities(), vec![1.0]);
        assert_eq!(p.eval_right(1.0), -5.0);
        assert_eq!(p.rate(0.5), 0.0);
    }

    #[test]
    fn sinusoid_is_bounded_by_1c_and_spans_two_seconds() {
        let p = sin_1c_2s(50.0);
        assert_eq!(p.span(), (0.0, 2.0));
        assert_eq!(p.knots().len(), 49);
        for &t in p.knots() {
            assert!(p.eval(t).abs() <= 50.0 + 1e-12);
        }
        assert!(p.eval(0.0).abs() < 1e-12);
    }

    #[test]
    fn drive_cycle_is_seeded_and_bounded() {
        let a = drive_cycle(50.0, 5.0, 800.0, 42);
        let b = drive_cycle(50.0, 5.0, 800.0, 42);
        let c = drive_cycle(50.0, 5.0, 800.0, 43);
        assert_eq!(a.knots(), b.knots());
        let va: Vec<f64> = a.knots().iter().map(|&t| a.eval(t)).collect();
        let vb: Vec<f64> = b.knots().iter().map(|&t| b.eval(t)).collect();
        let vc: Vec<f64> = c.knots().iter().map(|&t| c.eval(t)).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
        let peak = va.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 250.0).abs() < 1e-9, "peak {peak}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        let p = drive_cycle(50.0, 5.0, 30.0, 9);
        p.write_csv(&path).unwrap();
        let q = CurrentProfile::read_csv(&path).unwrap();
        assert_eq!(q.interp(), Interp::Linear);
        assert_eq!(q.knots().len(), p.knots().len());
        for &t in p.knots() {
            assert!((p.eval(t) - q.eval(t)).abs() < 1e-8 * p.eval(t).abs().max(1.0));
        }
    }
}
