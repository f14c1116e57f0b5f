//! Run configuration and its INI-style file format.
//!
//! ```text
//! [sim]
//! t_end = 20n
//! dt = auto
//! method = auto
//!
//! [quantum]
//! dims = 3
//!
//! [initial.1]
//! alpha = 1,0
//! beta = 1,0
//! ```

use std::path::{Path, PathBuf};

use ini::Ini;
use num_complex::Complex64;
use thiserror::Error;

use crate::analysis::Tolerances;
use crate::netlist::parse_value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Syntax(String),
    #[error("missing required section [{0}]")]
    MissingSection(&'static str),
    #[error("missing required key {0}")]
    MissingKey(&'static str),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key {key} in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("invalid value for {key}: {value:?} ({reason})")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("method {0} cannot integrate a circuit with junctions")]
    MethodNotAllowed(&'static str),
    #[error("initial state names DOF {dof}, circuit has {n_dof}")]
    NoSuchDof { dof: usize, n_dof: usize },
    #[error("{key} lists {got} entries, circuit has {expected} DOFs")]
    DofCount { key: &'static str, expected: usize, got: usize },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("invalid sweep {0:?}, expected key=start:stop:n")]
    BadSweep(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMethod {
    /// Linear propagator for linear circuits, RK4 otherwise.
    Auto,
    Rk4Full,
    LinearPropagator,
    /// c-number integration of the classical equations.
    Classical,
}

impl RunMethod {
    pub fn name(self) -> &'static str {
        match self {
            RunMethod::Auto => "auto",
            RunMethod::Rk4Full => "rk4-full",
            RunMethod::LinearPropagator => "linear-propagator",
            RunMethod::Classical => "classical",
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "auto" => Ok(RunMethod::Auto),
            "rk4-full" => Ok(RunMethod::Rk4Full),
            "linear-propagator" => Ok(RunMethod::LinearPropagator),
            "classical" => Ok(RunMethod::Classical),
            other => Err(invalid("method", other, "expected auto, rk4-full, linear-propagator or classical")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            "both" => Ok(OutputFormat::Both),
            other => Err(invalid("format", other, "expected csv, svg or both")),
        }
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

/// Initial `(α, β)` for one-based DOF `dof`; unlisted DOFs start in vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialAmplitudes {
    pub dof: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub dt: TimeStep,
    pub method: RunMethod,
    /// Fock truncation per DOF; a single entry applies to every DOF. Empty
    /// selects 4 with junctions, 2 with auxiliary capacitors, 3 otherwise.
    pub dims: Vec<usize>,
    pub initial: Vec<InitialAmplitudes>,
    pub k_j: Option<f64>,
    pub tolerances: Tolerances,
    /// Period used for `t_norm`; defaults to the natural period of DOF 1.
    pub t_ref: Option<f64>,
    pub sample_every: usize,
    /// One-based DOFs compared by the synchronization report; defaults to
    /// the first and last DOF.
    pub sync_pair: Option<(usize, usize)>,
    /// Value for auxiliary capacitors at singular nodes.
    pub aux_value: Option<f64>,
    pub diagnostics: bool,
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(t_end: f64) -> Self {
        RunConfig {
            t_end,
            dt: TimeStep::Auto,
            method: RunMethod::Auto,
            dims: Vec::new(),
            initial: Vec::new(),
            k_j: None,
            tolerances: Tolerances::default(),
            t_ref: None,
            sample_every: 1,
            sync_pair: None,
            aux_value: None,
            diagnostics: false,
            output_dir: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn with_initial(mut self, dof: usize, alpha: f64, beta: f64) -> Self {
        self.initial.retain(|a| a.dof != dof);
        self.initial.push(InitialAmplitudes {
            dof,
            alpha: Complex64::new(alpha, 0.0),
            beta: Complex64::new(beta, 0.0),
        });
        self.initial.sort_by_key(|a| a.dof);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end", &self.t_end.to_string(), "must be positive"));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0 && dt <= self.t_end) {
                return Err(invalid("dt", &dt.to_string(), "must lie in (0, t_end]"));
            }
        }
        if let Some(&n) = self.dims.iter().find(|&&n| n < 2) {
            return Err(invalid("dims", &n.to_string(), "every dimension must be at least 2"));
        }
        for a in &self.initial {
            if a.dof == 0 {
                return Err(invalid("initial", "0", "DOFs are numbered from 1"));
            }
            if a.alpha.norm() == 0.0 && a.beta.norm() == 0.0 {
                return Err(invalid(&format!("initial.{}", a.dof), "0", "alpha and beta cannot both vanish"));
            }
        }
        if let Some(k) = self.k_j {
            if !(k.is_finite() && k > 0.0) {
                return Err(invalid("k_j", &k.to_string(), "must be positive"));
            }
        }
        if let Some(t) = self.t_ref {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid("t_ref", &t.to_string(), "must be positive"));
            }
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "0", "must be at least 1"));
        }
        if let Some((a, b)) = self.sync_pair {
            if a == 0 || b == 0 || a == b {
                return Err(invalid("sync_pair", &format!("{a},{b}"), "need two distinct DOFs numbered from 1"));
            }
        }
        if let Some(c) = self.aux_value {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("caux", &c.to_string(), "must be positive"));
            }
        }
        self.tolerances
            .validate()
            .map_err(|e| invalid("tolerances", "", &e.to_string()))
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn quantity(key: &str, value: &str) -> Result<f64, ConfigError> {
    parse_value(value).map_err(|e| invalid(key, value, &e.to_string()))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| invalid(key, value, &e.to_string()))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| number(key, v)).collect()
}

/// `re,im` or a bare real part.
fn complex(key: &str, value: &str) -> Result<Complex64, ConfigError> {
    let parts: Vec<f64> = list(key, value)?;
    match parts[..] {
        [re] => Ok(Complex64::new(re, 0.0)),
        [re, im] => Ok(Complex64::new(re, im)),
        _ => Err(invalid(key, value, "expected re,im")),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn unknown(section: &str, key: &str) -> ConfigError {
    ConfigError::UnknownKey {
        section: section.to_string(),
        key: key.to_string(),
    }
}

/// Parses configuration text. `[sim]` with `t_end` is mandatory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let sim = ini.section(Some("sim")).ok_or(ConfigError::MissingSection("sim"))?;
    let t_end = sim.get("t_end").ok_or(ConfigError::MissingKey("t_end"))?;
    let mut cfg = RunConfig::new(quantity("t_end", t_end)?);

    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((key, _)) = props.iter().next() {
                return Err(unknown("", key));
            }
            continue;
        };
        match section {
            "sim" => {
                for (key, value) in props.iter() {
                    match key {
                        "t_end" => {}
                        "dt" if value.trim() == "auto" => cfg.dt = TimeStep::Auto,
                        "dt" => cfg.dt = TimeStep::Fixed(quantity(key, value)?),
                        "method" => cfg.method = RunMethod::parse(value.trim())?,
                        "t_ref" => cfg.t_ref = Some(quantity(key, value)?),
                        "sample_every" => cfg.sample_every = number(key, value)?,
                        "sync_pair" => {
                            let pair: Vec<usize> = list(key, value)?;
                            let [a, b] = pair[..] else {
                                return Err(invalid(key, value, "expected two DOF numbers"));
                            };
                            cfg.sync_pair = Some((a, b));
                        }
                        "caux" => cfg.aux_value = Some(quantity(key, value)?),
                        "diagnostics" => cfg.diagnostics = boolean(key, value)?,
                        _ => return Err(unknown(section, key)),
                    }
                }
            }
            "quantum" => {
                for (key, value) in props.iter() {
                    match key {
                        "dims" => cfg.dims = list(key, value)?,
                        "k_j" => cfg.k_j = Some(quantity(key, value)?),
                        _ => return Err(unknown(section, key)),
                    }
                }
            }
            "tolerances" => {
                for (key, value) in props.iter() {
                    let t = &mut cfg.tolerances;
                    match key {
                        "phase_tol" => t.phase_tol = number(key, value)?,
                        "amp_tol" => t.amp_tol = number(key, value)?,
                        "freq_tol" => t.freq_tol = number(key, value)?,
                        "periods" => t.periods = number(key, value)?,
                        _ => return Err(unknown(section, key)),
                    }
                }
            }
            "output" => {
                for (key, value) in props.iter() {
                    match key {
                        "dir" => cfg.output_dir = Some(PathBuf::from(value.trim())),
                        "format" => cfg.format = OutputFormat::parse(value.trim())?,
                        _ => return Err(unknown(section, key)),
                    }
                }
            }
            s if s.starts_with("initial.") => {
                let dof: usize = number("initial", &s["initial.".len()..])?;
                let mut amp = InitialAmplitudes {
                    dof,
                    alpha: Complex64::new(1.0, 0.0),
                    beta: Complex64::new(0.0, 0.0),
                };
                for (key, value) in props.iter() {
                    match key {
                        "alpha" => amp.alpha = complex(key, value)?,
                        "beta" => amp.beta = complex(key, value)?,
                        _ => return Err(unknown(section, key)),
                    }
                }
                cfg.initial.retain(|a| a.dof != dof);
                cfg.initial.push(amp);
            }
            other => return Err(ConfigError::UnknownSection(other.to_string())),
        }
    }
    cfg.initial.sort_by_key(|a| a.dof);
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, crate::Error> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = parse_config("[sim]\nt_end=20n\n[initial.1]\nalpha=1,0\nbeta=1,0").unwrap();
        assert_eq!(cfg.t_end, 2e-8);
        assert_eq!(cfg.dt, TimeStep::Auto);
        assert_eq!(cfg.method, RunMethod::Auto);
        assert_eq!(cfg.initial, vec![InitialAmplitudes { dof: 1, alpha: Complex64::new(1.0, 0.0), beta: Complex64::new(1.0, 0.0) }]);
    }

    #[test]
    fn full_config() {
        let text = "\
[sim]
t_end = 4n
dt = 1p
method = rk4-full
t_ref = 200p
sample_every = 2
sync_pair = 1,3
caux = 1.01f
diagnostics = true

[quantum]
dims = 4,4
k_j = 3.0e15

[initial.2]
alpha = 0.2
beta = -0.8,0.1

[tolerances]
phase_tol = 0.1
periods = 3

[output]
dir = out
format = both
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.dt, TimeStep::Fixed(1e-12));
        assert_eq!(cfg.method, RunMethod::Rk4Full);
        assert_eq!(cfg.t_ref, Some(2e-10));
        assert_eq!(cfg.sample_every, 2);
        assert_eq!(cfg.sync_pair, Some((1, 3)));
        assert_eq!(cfg.aux_value, Some(1.01e-15));
        assert!(cfg.diagnostics);
        assert_eq!(cfg.dims, vec![4, 4]);
        assert_eq!(cfg.k_j, Some(3.0e15));
        assert_eq!(cfg.initial[0].beta, Complex64::new(-0.8, 0.1));
        assert_eq!(cfg.tolerances.phase_tol, 0.1);
        assert_eq!(cfg.tolerances.periods, 3);
        assert_eq!(cfg.tolerances.amp_tol, 0.05);
        assert_eq!(cfg.format, OutputFormat::Both);
    }

    #[test]
    fn config_errors() {
        assert_eq!(parse_config("[quantum]\ndims=3"), Err(ConfigError::MissingSection("sim")));
        assert_eq!(parse_config("[sim]\ndt=1p"), Err(ConfigError::MissingKey("t_end")));
        assert!(matches!(parse_config("[sim]\nt_end=1n\nspeed=3"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\n[extra]\na=1"), Err(ConfigError::UnknownSection(_))));
        assert!(matches!(parse_config("[sim]\nt_end=-1n"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\nmethod=euler"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\n[quantum]\ndims=1"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\n[initial.1]\nalpha=0\nbeta=0"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\n[initial.x]\nalpha=1"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("[sim]\nt_end=1n\n[initial.1]\nbeta=1,2,3"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse_config("stray=1\n[sim]\nt_end=1n"), Err(ConfigError::UnknownKey { .. })));
    }
}
