//! Command-line front end: configuration, orchestration and CSV output.

pub mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig};

use crate::scan::{self, ScanError};
use crate::smatrix::{self, SmatrixError};
use crate::vortex::{self, ClassifyOptions, VortexError};
use crate::bispinor::BispinorBasis;
use output::Table;

#[derive(Debug, Parser)]
#[command(name = "vacuum-pairs", version, about = "Pair creation spectra from time-dependent electric pulses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Replace a configuration entry, e.g. `pulse.E0=0.7`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output path; overrides `output` in the configuration.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time series of the field and vector potential over the window.
    Pulse(Common),
    /// All amplitudes and distributions at `command.p`.
    Point(Common),
    /// Distribution over the momentum grid.
    Scan(Common),
    /// Difference between `method` and `command.against` over the grid.
    Compare(Common),
    /// Phase map of one amplitude and its singularities.
    Phase(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pulse(_) => "pulse",
            Command::Point(_) => "point",
            Command::Scan(_) => "scan",
            Command::Compare(_) => "compare",
            Command::Phase(_) => "phase",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Pulse(c) | Command::Point(c) | Command::Scan(c) | Command::Compare(c) | Command::Phase(c) => c,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Smatrix(#[from] SmatrixError),
    #[error(transparent)]
    Vortex(#[from] VortexError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Scan(ScanError::AtPoint { .. }) => "backend",
            CliError::Scan(_) => "scan",
            CliError::Smatrix(_) => "backend",
            CliError::Vortex(_) => "vortex",
        }
    }

    /// `error kind=<kind> message="<text>"` on one line.
    pub fn record(&self) -> String {
        let msg = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error kind={} message=\"{}\"", self.kind(), msg)
    }
}

/// What a finished command reports back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// `compare` ran but the difference exceeded the tolerance.
    ComparisonFailed,
}

pub fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Io { path: common.config.display().to_string(), source })?;
    let mut cfg = parse_config(&text, &common.overrides)?;
    if let Some(o) = &common.output {
        cfg.output = Some(o.display().to_string());
    }
    Ok(cfg)
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let cfg = load(command.common())?;
    run_command(command.name(), &cfg)
}

/// Runs `name` with a parsed configuration and writes its files.
pub fn run_command(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let header = output::header(name, cfg)?;
    let mut outcome = Outcome::Done;
    let tables = match name {
        "pulse" => vec![pulse_series(cfg)?],
        "point" => vec![point(cfg)?],
        "scan" => vec![scan_table(cfg)?],
        "compare" => {
            let (t, pass) = compare(cfg)?;
            if !pass {
                outcome = Outcome::ComparisonFailed;
            }
            vec![t]
        }
        "phase" => phase(cfg)?,
        other => return Err(ConfigError::Invalid { key: "command".into(), reason: format!("unknown command {other:?}") }.into()),
    };
    emit(cfg.output.as_deref(), &header, &tables)?;
    Ok(outcome)
}

fn emit(path: Option<&str>, header: &str, tables: &[Table]) -> Result<(), CliError> {
    match path {
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            let io = |source| CliError::Io { path: "<stdout>".into(), source };
            for (k, t) in tables.iter().enumerate() {
                if k > 0 {
                    writeln!(w).map_err(io)?;
                }
                w.write_all(t.render(header).as_bytes()).map_err(io)?;
            }
            Ok(())
        }
        Some(p) => {
            for (k, t) in tables.iter().enumerate() {
                let target = if k == 0 { PathBuf::from(p) } else { sibling(Path::new(p), &t.name) };
                std::fs::write(&target, t.render(header)).map_err(|source| CliError::Io { path: target.display().to_string(), source })?;
            }
            Ok(())
        }
    }
}

/// `out.csv` -> `out.<name>.csv`.
pub fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{name}.{ext}"))
}

fn pulse_series(cfg: &RunConfig) -> Result<Table, CliError> {
    let pulse = cfg.pulse()?;
    let w = cfg.window()?;
    let dt = cfg.command.dt;
    let n = ((w.t_f - w.t_i) / dt).floor() as usize;
    let mut t = Table::new("pulse", &["t", "E_x", "E_y", "E_z", "A_x", "A_y", "A_z"]);
    for k in 0..=n {
        let time = w.t_i + dt * k as f64;
        let (a, e) = pulse.potential_and_field(time);
        t.push(&[time, e.x, e.y, e.z, a.x, a.y, a.z]);
    }
    Ok(t)
}

fn point(cfg: &RunConfig) -> Result<Table, CliError> {
    let pr = cfg.problem()?;
    let p = nalgebra::Vector3::from(cfg.command.p);
    let r = smatrix::pair_distributions(&p, pr.variant, &pr.pulse, pr.basis, pr.window, &pr.spec)?;
    let mut t = Table::key_value("point");
    t.pair("f_total", r.f_total());
    let label = ["p", "m"];
    for c in 0..2 {
        for o in 0..2 {
            let k = format!("{}{}", label[c], label[o]);
            t.pair(&format!("f_{k}"), r.f[c][o]);
            t.pair(&format!("re_a_{k}"), r.amplitude[c][o].re);
            t.pair(&format!("im_a_{k}"), r.amplitude[c][o].im);
        }
    }
    t.pair("n_p", r.n_tilde[0]);
    t.pair("n_m", r.n_tilde[1]);
    t.pair("normalization_defect", r.normalization_defect);
    t.pair("norm_drift", r.norm_drift);
    Ok(t)
}

fn scan_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let pr = cfg.problem()?;
    let method = cfg.method()?;
    let r = scan::scan_grid(&cfg.grid()?, method, &pr, cfg.threads())?;
    Ok(output::grid_table(&r))
}

fn compare(cfg: &RunConfig) -> Result<(Table, bool), CliError> {
    let pr = cfg.problem()?;
    let grid = cfg.grid()?;
    let a = cfg.method()?;
    let mut t = Table::key_value("compare");
    let report = if cfg.command.reflection {
        t.text("check", "reflection");
        t.text("method", a.name());
        scan::reflection_check(&grid, a, &pr, cfg.threads())?
    } else {
        let b = cfg.against()?;
        t.text("check", "methods");
        t.text("method_a", a.name());
        t.text("method_b", b.name());
        scan::compare_methods(&grid, a, b, &pr, cfg.threads())?
    };
    t.pair("max_abs", report.max_abs);
    t.pair("max_abs_px", report.at_abs.x);
    t.pair("max_abs_py", report.at_abs.y);
    t.pair("max_rel", report.max_rel);
    t.pair("max_rel_px", report.at_rel.x);
    t.pair("max_rel_py", report.at_rel.y);
    t.pair("tolerance", cfg.command.tolerance);
    let pass = report.max_rel <= cfg.command.tolerance;
    t.text("status", if pass { "PASS" } else { "FAIL" });
    Ok((t, pass))
}

fn phase(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let pr = cfg.problem()?;
    let grid = cfg.grid()?;
    let (cond, out) = (cfg.cond()?, cfg.out()?);
    let map = if cfg.command.free_phase {
        vortex::amplitude_map(&grid, &pr, cond, out, cfg.solver.eta, cfg.threads())?
    } else {
        let amp = scan::map_grid(&grid, cfg.threads(), |p| {
            let r = smatrix::pair_distributions(p, pr.variant, &pr.pulse, pr.basis, pr.window, &pr.spec)?;
            Ok(r.amplitude[cond.index()][out.index()])
        })?;
        vortex::PhaseMap::new(grid, amp, cfg.solver.eta, pr.window)?
    };
    let windings = vortex::winding_numbers(&map)?;
    let options = ClassifyOptions { helicity: pr.basis == BispinorBasis::Helicity };
    let records = vortex::classify_singularities(&map, &windings, options);
    Ok(vec![output::phase_table(&map), output::singularity_table(&records)])
}
