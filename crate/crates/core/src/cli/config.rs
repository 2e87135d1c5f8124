//! Run configuration in TOML.
//!
//! ```toml
//! method = "smatrix"
//! variant = "feynman"
//! basis = "z"
//!
//! [pulse]
//! kind = "oscillating"
//! E0 = 0.5
//! tau0 = 3.0
//! sigma = 0.8
//! omega = 0.5
//!
//! [grid]
//! px_min = -2.0
//! px_max = 2.0
//! py_min = -2.0
//! py_max = 2.0
//! nx = 64
//! ny = 64
//! ```

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bispinor::BispinorBasis;
use crate::odeint::IntegratorSpec;
use crate::pulse::{PulseConfig, PulseError, PulseKind, TimeWindow, DEFAULT_EPS_A};
use crate::scan::{Axis, Method, MomentumGrid, Problem, ScanError};
use crate::smatrix::{Spin, Variant};
use crate::spinorial::SpinorialError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("override {0:?} is not of the form key=value")]
    Override(String),
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("pulse.{name} = {value}: {reason}")]
    Pulse { name: &'static str, value: f64, reason: &'static str },
    #[error(transparent)]
    PulseFrame(PulseError),
    #[error(transparent)]
    Grid(ScanError),
    #[error("method {method}: {source}")]
    Unsupported { method: &'static str, source: SpinorialError },
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub kind: String,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(default = "default_tau0")]
    pub tau0: f64,
    /// Defaults to `tau0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_eps1")]
    pub eps1: [f64; 3],
    #[serde(default = "default_eps2")]
    pub eps2: [f64; 3],
}

fn default_tau0() -> f64 {
    3.0
}

fn default_eps1() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_eps2() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub px_min: f64,
    pub px_max: f64,
    pub py_min: f64,
    pub py_max: f64,
    #[serde(default = "default_count")]
    pub nx: usize,
    #[serde(default = "default_count")]
    pub ny: usize,
    #[serde(default)]
    pub pz: f64,
}

fn default_count() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Threshold for the automatic time window.
    #[serde(default = "default_eps_a")]
    pub eps_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_rel_tol() -> f64 {
    IntegratorSpec::default().rel_tol
}
fn default_abs_tol() -> f64 {
    IntegratorSpec::default().abs_tol
}
fn default_max_step() -> f64 {
    IntegratorSpec::default().max_step
}
fn default_min_step() -> f64 {
    IntegratorSpec::default().min_step
}
fn default_max_steps() -> usize {
    IntegratorSpec::default().max_steps
}
fn default_eps_a() -> f64 {
    DEFAULT_EPS_A
}
fn default_eta() -> f64 {
    1.8
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_step: default_max_step(),
            min_step: default_min_step(),
            max_steps: default_max_steps(),
            eps_a: default_eps_a(),
            t_i: None,
            t_f: None,
            eta: default_eta(),
        }
    }
}

/// Options of individual commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSection {
    /// Momentum for `point`.
    #[serde(default)]
    pub p: [f64; 3],
    /// Second method for `compare`.
    #[serde(default = "default_against")]
    pub against: String,
    /// `compare` checks anti-Feynman at `p` against Feynman at `-p` instead.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reflection: bool,
    /// Pass threshold on `max_rel` for `compare`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Conditioning and outgoing spin of the `phase` amplitude.
    #[serde(default = "default_cond")]
    pub cond: String,
    #[serde(default = "default_out")]
    pub out: String,
    /// Time step of the `pulse` series.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Restore the free phase before applying the reference phase.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub free_phase: bool,
}

fn default_against() -> String {
    "dhw".into()
}
fn default_tolerance() -> f64 {
    1e-6
}
fn default_cond() -> String {
    "+".into()
}
fn default_out() -> String {
    "-".into()
}
fn default_dt() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}

impl Default for CommandSection {
    fn default() -> Self {
        CommandSection {
            p: [0.0; 3],
            against: default_against(),
            reflection: false,
            tolerance: default_tolerance(),
            cond: default_cond(),
            out: default_out(),
            dt: default_dt(),
            free_phase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default = "default_basis")]
    pub basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Worker count; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    pub pulse: PulseSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub command: CommandSection,
}

fn default_method() -> String {
    "smatrix".into()
}
fn default_variant() -> String {
    "feynman".into()
}
fn default_basis() -> String {
    "z".into()
}

/// Parses, applies `key=value` overrides and validates.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(item.to_string()));
    }
    // Values are TOML literals; anything else is taken as a bare string.
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap();
    let mut cur = table;
    for part in parts {
        let next = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = next.as_table_mut().ok_or_else(|| ConfigError::Invalid { key: key.to_string(), reason: format!("{part} is not a section") })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn method(&self) -> Result<Method, ConfigError> {
        self.method.parse().map_err(|e: ScanError| invalid("method", e))
    }

    pub fn against(&self) -> Result<Method, ConfigError> {
        self.command.against.parse().map_err(|e: ScanError| invalid("command.against", e))
    }

    pub fn variant(&self) -> Result<Variant, ConfigError> {
        self.variant.parse().map_err(|e: String| invalid("variant", e))
    }

    pub fn basis(&self) -> Result<BispinorBasis, ConfigError> {
        self.basis.parse().map_err(|e: crate::bispinor::BasisError| invalid("basis", e))
    }

    pub fn cond(&self) -> Result<Spin, ConfigError> {
        parse_spin(&self.command.cond).ok_or_else(|| invalid("command.cond", "expected + or -"))
    }

    pub fn out(&self) -> Result<Spin, ConfigError> {
        parse_spin(&self.command.out).ok_or_else(|| invalid("command.out", "expected + or -"))
    }

    pub fn threads(&self) -> usize {
        self.parallelism.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    pub fn pulse(&self) -> Result<PulseConfig, ConfigError> {
        let s = &self.pulse;
        let kind: PulseKind = s.kind.parse().map_err(|e: PulseError| invalid("pulse.kind", e))?;
        let pulse = PulseConfig {
            kind,
            e0: s.e0,
            tau0: s.tau0,
            t0: s.t0.unwrap_or(s.tau0),
            sigma: s.sigma,
            omega: s.omega,
            chi: s.chi,
            delta: s.delta,
            eps1: Vector3::from(s.eps1),
            eps2: Vector3::from(s.eps2),
        };
        pulse.validate().map_err(|e| match e {
            PulseError::InvalidParameter { name, value, reason } => ConfigError::Pulse { name, value, reason },
            other => ConfigError::PulseFrame(other),
        })?;
        Ok(pulse)
    }

    pub fn grid(&self) -> Result<MomentumGrid, ConfigError> {
        let g = &self.grid;
        MomentumGrid::new(Axis::new(g.px_min, g.px_max, g.nx), Axis::new(g.py_min, g.py_max, g.ny), g.pz).map_err(ConfigError::Grid)
    }

    pub fn spec(&self) -> Result<IntegratorSpec, ConfigError> {
        let s = &self.solver;
        let spec = IntegratorSpec { rel_tol: s.rel_tol, abs_tol: s.abs_tol, max_step: s.max_step, min_step: s.min_step, max_steps: s.max_steps };
        spec.validate().map_err(|e| invalid("solver", e))?;
        Ok(spec)
    }

    /// Explicit `t_i`/`t_f` where given, the automatic window otherwise.
    pub fn window(&self) -> Result<TimeWindow, ConfigError> {
        let pulse = self.pulse()?;
        let auto = pulse.integration_window(self.solver.eps_a).map_err(|e| invalid("solver.eps_a", e))?;
        let w = TimeWindow::new(self.solver.t_i.unwrap_or(auto.t_i), self.solver.t_f.unwrap_or(auto.t_f));
        if !(w.t_i < w.t_f && w.t_i.is_finite() && w.t_f.is_finite()) {
            return Err(invalid("solver.t_i", format!("need t_i < t_f, got [{}, {}]", w.t_i, w.t_f)));
        }
        Ok(w)
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        Ok(Problem { pulse: self.pulse()?, window: self.window()?, spec: self.spec()?, basis: self.basis()?, variant: self.variant()? })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pulse = self.pulse()?;
        self.grid()?;
        self.window()?;
        self.basis()?;
        self.variant()?;
        self.cond()?;
        self.out()?;
        for m in [self.method()?, self.against()?] {
            if m == Method::Spinorial && !pulse.is_linear() {
                return Err(ConfigError::Unsupported { method: m.name(), source: SpinorialError::UnsupportedPolarization { delta: pulse.delta } });
            }
        }
        if self.parallelism == Some(0) {
            return Err(invalid("parallelism", "must be positive"));
        }
        if !(self.solver.eta.is_finite()) {
            return Err(invalid("solver.eta", "must be finite"));
        }
        if !(self.command.dt > 0.0) {
            return Err(invalid("command.dt", "must be positive"));
        }
        if !(self.command.tolerance >= 0.0) {
            return Err(invalid("command.tolerance", "must be non-negative"));
        }
        Ok(())
    }
}

fn parse_spin(s: &str) -> Option<Spin> {
    match s.trim() {
        "+" | "plus" | "up" => Some(Spin::Plus),
        "-" | "minus" | "down" => Some(Spin::Minus),
        _ => None,
    }
}
