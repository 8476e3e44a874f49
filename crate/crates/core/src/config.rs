//! Run configuration: a flat `key = value` text format with dotted sections.
//!
//! ```text
//! # comment
//! seed = 7
//! physical.density_per_cm3 = 5e12
//!
//! [noise]            # later keys are read as noise.<key>
//! eta_t = 0.2
//! ```
//!
//! Keys are lowercase `[a-z0-9_]` segments joined by dots. A `[section]`
//! header prefixes every following key until the next header; `[]` resets
//! it. Everything after `#` is a comment. Repeating a key is an error.
//!
//! Precedence when merging sources: command-line flags, then environment
//! variables `EQC_<KEY>` (dots written as `__`, e.g. `EQC_NOISE__ETA_T`),
//! then the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::interaction::{
    derive_channel, gamma_from_dipole, ChannelParams, Coupling, PhysicalParams, RegimeThresholds,
};
use crate::protocols::{Noise, Scheme, DEFAULT_KAPPA1_RATIO};

pub const ENV_PREFIX: &str = "EQC_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key '{key}': {message}")]
    Key { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn key_err<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Key { key: key.to_string(), message: message.into() })
}

fn valid_segment(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

fn valid_key(key: &str) -> bool {
    key.split('.').all(valid_segment)
}

/// Raw key/value pairs, ordered by key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: "unterminated section header".into(),
                    })?
                    .trim();
                if !name.is_empty() && !valid_key(name) {
                    return Err(ConfigError::Syntax { line: line_no, message: format!("bad section name '{name}'") });
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let k = k.trim();
            let v = v.trim();
            if !valid_key(k) {
                return Err(ConfigError::Syntax { line: line_no, message: format!("bad key '{k}'") });
            }
            if v.is_empty() {
                return Err(ConfigError::Syntax { line: line_no, message: format!("key '{k}' has no value") });
            }
            let full = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if map.insert(full.clone(), v.to_string()).is_some() {
                return Err(ConfigError::Syntax { line: line_no, message: format!("duplicate key '{full}'") });
            }
        }
        Ok(ConfigMap(map))
    }

    /// One `key = value` line per entry, sorted by key.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !valid_key(key) {
            return key_err(key, "not a valid key");
        }
        let value = value.into();
        if value.trim().is_empty() || value.contains('\n') || value.contains('#') {
            return key_err(key, "value must be a single non-empty token without '#'");
        }
        self.0.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    /// Entries from `EQC_*` variables.
    pub fn from_env<I: IntoIterator<Item = (String, String)>>(vars: I) -> Result<Self, ConfigError> {
        let mut map = ConfigMap::new();
        for (name, value) in vars {
            if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                let key = rest.to_ascii_lowercase().replace("__", ".");
                map.set(&key, value).map_err(|_| ConfigError::Key {
                    key: name.clone(),
                    message: "environment override does not name a valid key".into(),
                })?;
            }
        }
        Ok(map)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.0
    }

    fn num(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => key_err(key, format!("expected a finite number, got '{v}'")),
            },
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).or_else(|_| key_err(key, format!("expected {what}, got '{v}'"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| ConfigError::Key {
                    key: key.to_string(),
                    message: format!("expected a comma-separated list of numbers, got '{v}'"),
                }),
        }
    }
}

impl fmt::Display for ConfigMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "trials",
    "threads",
    "output.path",
    "output.format",
    "physical.lambda0",
    "physical.area",
    "physical.fresnel",
    "physical.length",
    "physical.density",
    "physical.density_per_cm3",
    "physical.detuning",
    "physical.detuning_over_gamma",
    "physical.gamma",
    "physical.gamma_prime",
    "physical.n_photons",
    "physical.n_atoms",
    "physical.pulse_duration",
    "physical.coupling",
    "physical.dipole",
    "channel.kappa",
    "channel.eps_p",
    "channel.eps_a",
    "rounds.scheme",
    "rounds.kappa1",
    "rounds.kappa2",
    "noise.eta_t",
    "noise.eta_d",
    "noise.local_eta_t",
    "teleport.input_x",
    "teleport.input_p",
    "sweep.kappa2_min",
    "sweep.kappa2_max",
    "sweep.steps",
    "sweep.eta_t",
    "sweep.kappa1_ratio",
    "mb.grids",
    "mb.kappa_tol",
    "mb.eps_tol",
    "regime.eps_max",
    "regime.kappa_over_sqrt_n_max",
    "regime.detuning_over_gamma_min",
    "regime.fresnel_tolerance",
    "regime.adiabatic_ratio_min",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Symmetric,
    Asymmetric,
}

impl FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "symmetric" => Ok(SchemeKind::Symmetric),
            "asymmetric" => Ok(SchemeKind::Asymmetric),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub kappa2_min: f64,
    pub kappa2_max: f64,
    pub steps: usize,
    pub eta_t: Vec<f64>,
    pub kappa1_ratio: f64,
}

impl SweepSpec {
    pub fn kappa2_grid(&self) -> Vec<f64> {
        let span = self.kappa2_max - self.kappa2_min;
        (0..self.steps).map(|i| self.kappa2_min + span * i as f64 / (self.steps - 1) as f64).collect()
    }

    pub fn step(&self) -> f64 {
        (self.kappa2_max - self.kappa2_min) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MbSpec {
    pub grids: Vec<usize>,
    pub kappa_tol: f64,
    pub eps_tol: f64,
}

/// Where the channel parameters came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelSource {
    Physical,
    Channel,
    Both,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub physical: Option<PhysicalParams>,
    pub channel: ChannelParams,
    pub channel_source: ChannelSource,
    pub scheme_kind: SchemeKind,
    pub kappa1: f64,
    pub kappa2: f64,
    pub noise: Noise,
    pub input: (f64, f64),
    pub sweep: SweepSpec,
    pub mb: MbSpec,
    pub thresholds: RegimeThresholds,
    pub seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// The raw entries this configuration was resolved from.
    #[serde(skip)]
    pub source: ConfigMap,
}

fn unit_interval(key: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        key_err(key, format!("must lie in [0, 1), got {v}"))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        key_err(key, format!("must be positive, got {v}"))
    }
}

fn resolve_physical(m: &ConfigMap) -> Result<Option<PhysicalParams>, ConfigError> {
    let has_any = m.entries().keys().any(|k| k.starts_with("physical."));
    if !has_any {
        return Ok(None);
    }
    let need = |key: &str| -> Result<f64, ConfigError> {
        m.num(key)?.ok_or_else(|| ConfigError::Key { key: key.into(), message: "required".into() })
    };
    let lambda0 = positive("physical.lambda0", need("physical.lambda0")?)?;
    let length = positive("physical.length", need("physical.length")?)?;
    let area = match (m.num("physical.area")?, m.num("physical.fresnel")?) {
        (Some(a), None) => positive("physical.area", a)?,
        (None, Some(f)) => positive("physical.fresnel", f)? * lambda0 * length,
        (Some(_), Some(_)) => return key_err("physical.fresnel", "give either physical.area or physical.fresnel"),
        (None, None) => return key_err("physical.area", "required (or physical.fresnel)"),
    };
    let density = match (m.num("physical.density")?, m.num("physical.density_per_cm3")?) {
        (Some(d), None) => d,
        (None, Some(d)) => d * 1e6,
        (Some(_), Some(_)) => {
            return key_err("physical.density_per_cm3", "give either physical.density or physical.density_per_cm3")
        }
        (None, None) => return key_err("physical.density", "required (or physical.density_per_cm3)"),
    };
    let coupling = match (m.num("physical.coupling")?, m.num("physical.dipole")?) {
        (Some(g), None) => Coupling::Direct(g),
        (None, Some(d)) => Coupling::Dipole(d),
        (Some(_), Some(_)) => return key_err("physical.dipole", "give either physical.coupling or physical.dipole"),
        (None, None) => return key_err("physical.coupling", "required (or physical.dipole)"),
    };
    let gamma = match (m.num("physical.gamma")?, coupling) {
        (Some(g), _) => g,
        (None, Coupling::Dipole(d)) => gamma_from_dipole(d, lambda0),
        (None, Coupling::Direct(_)) => {
            return key_err("physical.gamma", "required when the coupling is given directly")
        }
    };
    let gamma_prime = m.num("physical.gamma_prime")?.unwrap_or(gamma);
    let detuning = match (m.num("physical.detuning")?, m.num("physical.detuning_over_gamma")?) {
        (Some(d), None) => d,
        (None, Some(r)) => r * gamma,
        (Some(_), Some(_)) => {
            return key_err(
                "physical.detuning_over_gamma",
                "give either physical.detuning or physical.detuning_over_gamma",
            )
        }
        (None, None) => return key_err("physical.detuning", "required (or physical.detuning_over_gamma)"),
    };
    let n_atoms = m.num("physical.n_atoms")?.unwrap_or(0.5 * density * area * length);
    let n_photons = m.num("physical.n_photons")?.unwrap_or(n_atoms);
    let pulse_duration = need("physical.pulse_duration")?;
    let p = PhysicalParams {
        lambda0,
        area,
        length,
        density,
        detuning,
        gamma,
        gamma_prime,
        n_photons,
        n_atoms,
        pulse_duration,
        coupling,
    };
    p.validate().map_err(|e| ConfigError::Key { key: "physical".into(), message: e.to_string() })?;
    Ok(Some(p))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-300)
}

impl RunConfig {
    pub fn resolve(m: &ConfigMap) -> Result<Self, ConfigError> {
        if let Some(k) = m.entries().keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return key_err(k, "unknown key");
        }
        let physical = resolve_physical(m)?;
        let supplied = [
            ("channel.kappa", m.num("channel.kappa")?),
            ("channel.eps_p", m.num("channel.eps_p")?),
            ("channel.eps_a", m.num("channel.eps_a")?),
        ];
        let given = match supplied {
            [(_, None), (_, None), (_, None)] => None,
            [(_, Some(k)), (_, p), (_, a)] => Some(
                ChannelParams::new(k, p.unwrap_or(0.0), a.unwrap_or(0.0))
                    .map_err(|e| ConfigError::Key { key: "channel".into(), message: e.to_string() })?,
            ),
            _ => return key_err("channel.kappa", "required when other channel keys are present"),
        };
        let physical_err = |e: crate::Error| ConfigError::Key { key: "physical".into(), message: e.to_string() };
        let (channel, channel_source) = match (physical, given) {
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "configuration needs either a [physical] or a [channel] section".into(),
                ))
            }
            (Some(p), None) => (derive_channel(&p).map_err(physical_err)?, ChannelSource::Physical),
            (None, Some(c)) => (c, ChannelSource::Channel),
            (Some(p), Some(_)) => {
                // only the supplied channel keys are checked against the derived values
                let d = derive_channel(&p).map_err(physical_err)?;
                for ((key, value), derived) in supplied.iter().zip([d.kappa, d.eps_p, d.eps_a]) {
                    if let Some(v) = *value {
                        if !close(v, derived) {
                            return key_err(key, format!("value {v} disagrees with {derived} derived from [physical]"));
                        }
                    }
                }
                (d, ChannelSource::Both)
            }
        };

        let scheme_kind =
            m.parsed::<SchemeKind>("rounds.scheme", "'symmetric' or 'asymmetric'")?.unwrap_or(SchemeKind::Symmetric);
        let kappa2 = m.num("rounds.kappa2")?.unwrap_or(channel.kappa);
        if kappa2 < 0.0 {
            return key_err("rounds.kappa2", "must be >= 0");
        }
        let kappa1 = match m.num("rounds.kappa1")? {
            Some(k) if k >= 0.0 => k,
            Some(_) => return key_err("rounds.kappa1", "must be >= 0"),
            None => match scheme_kind {
                SchemeKind::Symmetric => kappa2,
                SchemeKind::Asymmetric => DEFAULT_KAPPA1_RATIO * kappa2,
            },
        };
        let eta_t = unit_interval("noise.eta_t", m.num("noise.eta_t")?.unwrap_or(0.0))?;
        let eta_d = unit_interval("noise.eta_d", m.num("noise.eta_d")?.unwrap_or(0.0))?;
        let local_eta_t = unit_interval("noise.local_eta_t", m.num("noise.local_eta_t")?.unwrap_or(eta_t))?;
        let noise = Noise { eps_p: channel.eps_p, eps_a: channel.eps_a, eta_t, eta_d, local_eta_t };
        let input = (m.num("teleport.input_x")?.unwrap_or(0.0), m.num("teleport.input_p")?.unwrap_or(0.0));

        let sweep = {
            let kappa2_min = m.num("sweep.kappa2_min")?.unwrap_or(0.2);
            let kappa2_max = m.num("sweep.kappa2_max")?.unwrap_or(10.0);
            if !(kappa2_min > 0.0 && kappa2_max > kappa2_min) {
                return key_err("sweep.kappa2_max", "need 0 < kappa2_min < kappa2_max");
            }
            let steps = m.parsed::<usize>("sweep.steps", "an integer")?.unwrap_or(200);
            if steps < 2 {
                return key_err("sweep.steps", "must be at least 2");
            }
            let etas = m.list("sweep.eta_t")?.unwrap_or_else(|| vec![eta_t]);
            for &e in &etas {
                unit_interval("sweep.eta_t", e)?;
            }
            let kappa1_ratio =
                positive("sweep.kappa1_ratio", m.num("sweep.kappa1_ratio")?.unwrap_or(DEFAULT_KAPPA1_RATIO))?;
            SweepSpec { kappa2_min, kappa2_max, steps, eta_t: etas, kappa1_ratio }
        };

        let grids = match m.list("mb.grids")? {
            None => vec![4, 8, 16, 32, 64],
            Some(v) => v
                .into_iter()
                .map(|x| {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        key_err("mb.grids", "grid sizes must be positive integers")
                    }
                })
                .collect::<Result<_, _>>()?,
        };
        if grids.is_empty() {
            return key_err("mb.grids", "needs at least one grid size");
        }
        let mb = MbSpec {
            grids,
            kappa_tol: positive("mb.kappa_tol", m.num("mb.kappa_tol")?.unwrap_or(0.01))?,
            eps_tol: positive("mb.eps_tol", m.num("mb.eps_tol")?.unwrap_or(0.05))?,
        };

        let d = RegimeThresholds::default();
        let thresholds = RegimeThresholds {
            eps_max: m.num("regime.eps_max")?.unwrap_or(d.eps_max),
            kappa_over_sqrt_n_max: m.num("regime.kappa_over_sqrt_n_max")?.unwrap_or(d.kappa_over_sqrt_n_max),
            detuning_over_gamma_min: m.num("regime.detuning_over_gamma_min")?.unwrap_or(d.detuning_over_gamma_min),
            fresnel_tolerance: m.num("regime.fresnel_tolerance")?.unwrap_or(d.fresnel_tolerance),
            adiabatic_ratio_min: m.num("regime.adiabatic_ratio_min")?.unwrap_or(d.adiabatic_ratio_min),
        };

        let seed = m.parsed::<u64>("seed", "an unsigned 64-bit integer")?.unwrap_or(0);
        let trials = m.parsed::<usize>("trials", "a positive integer")?.unwrap_or(1);
        if trials == 0 {
            return key_err("trials", "must be at least 1");
        }
        let threads = m.parsed::<usize>("threads", "a positive integer")?.unwrap_or(1);
        if threads == 0 {
            return key_err("threads", "must be at least 1");
        }
        let format = m.parsed::<OutputFormat>("output.format", "'json' or 'csv'")?.unwrap_or(OutputFormat::Json);
        let output_path = m.get("output.path").map(PathBuf::from);

        Ok(RunConfig {
            physical,
            channel,
            channel_source,
            scheme_kind,
            kappa1,
            kappa2,
            noise,
            input,
            sweep,
            mb,
            thresholds,
            seed,
            trials,
            threads,
            output_path,
            format,
            source: m.clone(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme_kind {
            SchemeKind::Symmetric if self.kappa1 == self.kappa2 => Scheme::symmetric(self.kappa2, self.noise),
            _ => Scheme::asymmetric(self.kappa1, self.kappa2, self.noise),
        }
    }

    /// The resolved configuration as sorted `key = value` entries, suitable
    /// for embedding in output files. Excludes the output location and
    /// thread count so artifacts do not depend on where or how they were made.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        if let Some(p) = &self.physical {
            put("physical.lambda0", fmt_f64(p.lambda0));
            put("physical.area", fmt_f64(p.area));
            put("physical.length", fmt_f64(p.length));
            put("physical.density", fmt_f64(p.density));
            put("physical.detuning", fmt_f64(p.detuning));
            put("physical.gamma", fmt_f64(p.gamma));
            put("physical.gamma_prime", fmt_f64(p.gamma_prime));
            put("physical.n_photons", fmt_f64(p.n_photons));
            put("physical.n_atoms", fmt_f64(p.n_atoms));
            put("physical.pulse_duration", fmt_f64(p.pulse_duration));
            match p.coupling {
                Coupling::Direct(g) => put("physical.coupling", fmt_f64(g)),
                Coupling::Dipole(d) => put("physical.dipole", fmt_f64(d)),
            }
        }
        put("channel.kappa", fmt_f64(self.channel.kappa));
        put("channel.eps_p", fmt_f64(self.channel.eps_p));
        put("channel.eps_a", fmt_f64(self.channel.eps_a));
        put(
            "rounds.scheme",
            match self.scheme_kind {
                SchemeKind::Symmetric => "symmetric".into(),
                SchemeKind::Asymmetric => "asymmetric".into(),
            },
        );
        put("rounds.kappa1", fmt_f64(self.kappa1));
        put("rounds.kappa2", fmt_f64(self.kappa2));
        put("noise.eta_t", fmt_f64(self.noise.eta_t));
        put("noise.eta_d", fmt_f64(self.noise.eta_d));
        put("noise.local_eta_t", fmt_f64(self.noise.local_eta_t));
        put("teleport.input_x", fmt_f64(self.input.0));
        put("teleport.input_p", fmt_f64(self.input.1));
        let s = &self.sweep;
        put("sweep.kappa2_min", fmt_f64(s.kappa2_min));
        put("sweep.kappa2_max", fmt_f64(s.kappa2_max));
        put("sweep.steps", s.steps.to_string());
        put("sweep.eta_t", s.eta_t.iter().map(|&e| fmt_f64(e)).collect::<Vec<_>>().join(","));
        put("sweep.kappa1_ratio", fmt_f64(s.kappa1_ratio));
        put("mb.grids", self.mb.grids.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(","));
        put("mb.kappa_tol", fmt_f64(self.mb.kappa_tol));
        put("mb.eps_tol", fmt_f64(self.mb.eps_tol));
        let t = &self.thresholds;
        put("regime.eps_max", fmt_f64(t.eps_max));
        put("regime.kappa_over_sqrt_n_max", fmt_f64(t.kappa_over_sqrt_n_max));
        put("regime.detuning_over_gamma_min", fmt_f64(t.detuning_over_gamma_min));
        put("regime.fresnel_tolerance", fmt_f64(t.fresnel_tolerance));
        put("regime.adiabatic_ratio_min", fmt_f64(t.adiabatic_ratio_min));
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        out
    }
}

/// 17 significant digits, scientific notation, locale independent.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}
