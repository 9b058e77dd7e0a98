//! Flat key-value configuration files.
//!
//! Syntax: one `key = value` pair per line, `#` comments, keys dotted by
//! convention (`anode.d_s_m2_s`). Property functions of electrolyte
//! concentration use the form `powers p:c p:c ...` meaning
//! `sum c * (ce/1000)^p`. File paths are resolved relative to the config
//! file. The full schema ships in the repository README and the default
//! config.

use crate::error::CoreError;
use crate::minn::TrainConfig;
use crate::physics::{
    CellModel, CellParameters, ElectrodeParams, OcpTable, PowerSeries, StateLayout,
};
use crate::Result;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Parsed key-value file with typed getters.
#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CoreError::Config(format!("line {}: empty key", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values, base_dir: base_dir.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| CoreError::Config(format!("{key}: `{raw}` is not a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            Some(_) => self.f64(key),
            None => Ok(default),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| CoreError::Config(format!("{key}: `{raw}` is not an integer")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.values.get(key) {
            Some(_) => self.usize(key),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.values.get(key).map(|s| s.as_str()) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(CoreError::Config(format!("{key}: `{other}` is not a bool"))),
        }
    }

    /// Resolve a path value against the config directory.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let raw = self.require(key)?;
        let p = PathBuf::from(raw);
        Ok(if p.is_absolute() { p } else { self.base_dir.join(p) })
    }

    /// `powers p:c p:c ...` property function of `ce/1000`.
    pub fn power_series(&self, key: &str) -> Result<PowerSeries> {
        let raw = self.require(key)?;
        let rest = raw.strip_prefix("powers").ok_or_else(|| {
            CoreError::Config(format!("{key}: expected `powers p:c ...`, got `{raw}`"))
        })?;
        let mut terms = Vec::new();
        for tok in rest.split_whitespace() {
            let (p, c) = tok.split_once(':').ok_or_else(|| {
                CoreError::Config(format!("{key}: bad term `{tok}` (want pow:coef)"))
            })?;
            let p: f64 = p
                .parse()
                .map_err(|_| CoreError::Config(format!("{key}: bad exponent in `{tok}`")))?;
            let c: f64 = c
                .parse()
                .map_err(|_| CoreError::Config(format!("{key}: bad coefficient in `{tok}`")))?;
            terms.push((p, c));
        }
        if terms.is_empty() {
            return Err(CoreError::Config(format!("{key}: empty power series")));
        }
        Ok(PowerSeries { c_ref: 1000.0, terms })
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| CoreError::Config(format!("missing key `{key}`")))
    }

    /// Comma/space-separated list of integers.
    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| CoreError::Config(format!("{key}: `{s}` is not an integer")))
                })
                .collect(),
        }
    }
}

/// Load a two-column (stoichiometry, volts) OCP table, `#` comments and an
/// optional header line allowed.
pub fn load_ocp_csv(path: &Path) -> Result<OcpTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let a = parts.next().map(str::trim);
        let b = parts.next().map(str::trim);
        if let (Some(a), Some(b)) = (a, b) {
            if let (Ok(x), Ok(y)) = (a.parse::<f64>(), b.parse::<f64>()) {
                pts.push((x, y));
                continue;
            }
            // tolerate one header line
            if pts.is_empty() {
                continue;
            }
            return Err(CoreError::Config(format!("{}: bad row `{line}`", path.display())));
        }
    }
    OcpTable::new(&pts)
}

fn electrode_from_config(cfg: &Config, prefix: &str, brug: f64) -> Result<ElectrodeParams> {
    let key = |k: &str| format!("{prefix}.{k}");
    let radius = cfg.f64(&key("particle_radius_m"))?;
    let eps_s = cfg.f64(&key("eps_s"))?;
    let sigma = cfg.f64(&key("sigma_s_m"))?;
    let ocp = load_ocp_csv(&cfg.path(&key("ocp_csv"))?)?;
    Ok(ElectrodeParams {
        d_s: cfg.f64(&key("d_s_m2_s"))?,
        radius,
        cs_max: cfg.f64(&key("cs_max_mol_m3"))?,
        k0: cfg.f64(&key("k0"))?,
        a_s: 3.0 * eps_s / radius,
        sigma_eff: sigma * eps_s.powf(brug),
        thickness: cfg.f64(&key("thickness_m"))?,
        r_sei: cfg.f64_or(&key("r_sei_ohm_m2"), 0.0)?,
        eps_s,
        eps_e: cfg.f64(&key("eps_e"))?,
        ocp,
    })
}

/// Build the physical parameter set from a config.
pub fn cell_parameters(cfg: &Config) -> Result<CellParameters> {
    let brug = cfg.f64_or("cell.bruggeman", 1.5)?;
    let p = CellParameters {
        anode: electrode_from_config(cfg, "anode", brug)?,
        cathode: electrode_from_config(cfg, "cathode", brug)?,
        sep_thickness: cfg.f64("separator.thickness_m")?,
        sep_eps_e: cfg.f64("separator.eps_e")?,
        d_e: cfg.power_series("electrolyte.d_e_m2_s")?,
        kappa: cfg.power_series("electrolyte.kappa_s_m")?,
        bruggeman: brug,
        t_plus: cfg.f64("cell.t_plus")?,
        temperature: cfg.f64("cell.temperature_k")?,
        c_e_init: cfg.f64("cell.c_e_init_mol_m3")?,
        current_1c: cfg.f64("cell.current_1c_a_m2")?,
        stoich_0pct: cfg.f64("anode.stoich_0pct")?,
        stoich_100pct: cfg.f64("anode.stoich_100pct")?,
        cathode_stoich_soc0: cfg.f64("cathode.stoich_at_soc0")?,
        faraday: cfg.f64_or("constants.faraday_c_mol", 96485.33212)?,
        gas_constant: cfg.f64_or("constants.gas_j_mol_k", 8.314462618)?,
        boltzmann: cfg.f64_or("constants.boltzmann_j_k", 1.380649e-23)?,
        i0_floor: cfg.f64_or("cell.i0_floor_a_m2", 1e-6)?,
        ce_floor: cfg.f64_or("cell.ce_floor_mol_m3", 1.0)?,
    };
    p.validate()?;
    Ok(p)
}

/// Named grid resolution (`truth` or `reduced`).
pub fn grid_layout(cfg: &Config, name: &str) -> Result<StateLayout> {
    let n_x = cfg.usize(&format!("grid.{name}.n_x"))?;
    let n_x_sep = cfg.usize(&format!("grid.{name}.n_x_sep"))?;
    let n_r = cfg.usize(&format!("grid.{name}.n_r"))?;
    Ok(StateLayout::new(n_x, n_x_sep, n_x, n_r))
}

/// Build a full model at a named grid resolution.
pub fn cell_model(cfg: &Config, grid_name: &str) -> Result<CellModel> {
    let params = cell_parameters(cfg)?;
    CellModel::with_layout(params, grid_layout(cfg, grid_name)?)
}

/// Training hyperparameters under the `train.` prefix (defaults apply).
pub fn train_config(cfg: &Config, seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        learning_rate: cfg.f64_or("train.learning_rate", d.learning_rate)?,
        beta1: cfg.f64_or("train.beta1", d.beta1)?,
        beta2: cfg.f64_or("train.beta2", d.beta2)?,
        epsilon: cfg.f64_or("train.epsilon", d.epsilon)?,
        weight_decay: cfg.f64_or("train.weight_decay", d.weight_decay)?,
        lambda_init: cfg.f64_or("train.lambda_init", d.lambda_init)?,
        lambda_rate: match cfg.raw("train.lambda_rate") {
            None | Some("auto") => None,
            Some(_) => Some(cfg.f64("train.lambda_rate")?),
        },
        lambda_period: cfg.usize_or("train.lambda_period", d.lambda_period)?,
        max_epochs: cfg.usize_or("train.max_epochs", d.max_epochs)?,
        flatline_window: cfg.usize_or("train.flatline_window", d.flatline_window)?,
        flatline_tol: cfg.f64_or("train.flatline_tol", d.flatline_tol)?,
        seed,
        rtol: cfg.f64_or("train.rtol", d.rtol)?,
        atol: cfg.f64_or("train.atol", d.atol)?,
        fixed_step: None,
        chunk: cfg.usize_or("train.chunk", d.chunk)?,
        hidden: cfg.usize_list_or("train.hidden", &d.hidden)?,
        penalty: cfg.f64_or("train.penalty", d.penalty)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_key_values_with_comments() {
        let text = "\n# comment\na.b = 1.5\nname = hello # trailing\nflag = true\n";
        let cfg = Config::parse(text, Path::new(".")).unwrap();
        assert_eq!(cfg.f64("a.b").unwrap(), 1.5);
        assert_eq!(cfg.raw("name"), Some("hello"));
        assert!(cfg.bool_or("flag", false).unwrap());
        assert_eq!(cfg.f64_or("missing", 2.0).unwrap(), 2.0);
        assert!(cfg.f64("missing").is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("just a line", Path::new(".")).is_err());
    }

    #[test]
    fn parses_power_series() {
        let cfg = Config::parse("f = powers 0:1.0 1.5:-2.5 3:0.1", Path::new(".")).unwrap();
        let ps = cfg.power_series("f").unwrap();
        assert_eq!(ps.terms.len(), 3);
        let v: f64 = ps.eval(1000.0);
        assert!((v - (1.0 - 2.5 + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn usize_lists_parse() {
        let cfg = Config::parse("h = 16, 16, 16", Path::new(".")).unwrap();
        assert_eq!(cfg.usize_list_or("h", &[64]).unwrap(), vec![16, 16, 16]);
        assert_eq!(cfg.usize_list_or("missing", &[64]).unwrap(), vec![64]);
    }
}
