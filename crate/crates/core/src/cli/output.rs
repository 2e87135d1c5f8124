//! CSV rendering. Floats use Rust's shortest round-trip exponent form.

use super::{CliError, RunConfig};
use crate::scan::GridResult;
use crate::vortex::{PhaseMap, SingularityRecord};

pub(crate) fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One CSV file: column names and rows of preformatted cells.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub name: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn key_value(name: &str) -> Self {
        Self::new(name, &["quantity", "value"])
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn push_cells(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn pair(&mut self, key: &str, value: f64) {
        self.rows.push(vec![key.into(), num(value)]);
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.rows.push(vec![key.into(), value.into()]);
    }

    pub fn render(&self, header: &str) -> String {
        let mut s = String::with_capacity(header.len() + 32 * self.rows.len() * self.columns.len());
        s.push_str(header);
        s.push_str(&format!("# table = {}\n", self.name));
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Comment block with the effective configuration. The output path and
/// the worker count are left out so that the files only depend on inputs.
pub(crate) fn header(command: &str, cfg: &RunConfig) -> Result<String, CliError> {
    let mut shown = cfg.clone();
    shown.output = None;
    shown.parallelism = None;
    let w = cfg.window()?;
    let mut s = format!("# vacuum-pairs {} {}\n", command, env!("CARGO_PKG_VERSION"));
    for line in shown.to_toml().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            s.push_str(&format!("# {line}\n"));
        }
    }
    s.push_str(&format!("#\n# window = [{}, {}]\n", num(w.t_i), num(w.t_f)));
    Ok(s)
}

pub(crate) fn grid_table(r: &GridResult) -> Table {
    let resolved = r.values.first().is_some_and(|v| v.resolved.is_some());
    let mut cols = vec!["px", "py", "pz", "f_total"];
    if resolved {
        cols.extend([
            "f_pp", "f_pm", "f_mp", "f_mm", "re_a_pp", "re_a_pm", "re_a_mp", "re_a_mm", "im_a_pp", "im_a_pm", "im_a_mp", "im_a_mm", "n_p", "n_m",
        ]);
    }
    let mut t = Table::new("scan", &cols);
    let g = &r.grid;
    for j in 0..g.py.count {
        for i in 0..g.px.count {
            let p = g.point(i, j);
            let v = r.at(i, j);
            let mut row = vec![p.x, p.y, p.z, v.f_total];
            if let Some(s) = &v.resolved {
                row.extend(s.f.iter().flatten());
                row.extend(s.amplitude.iter().flatten().map(|a| a.re));
                row.extend(s.amplitude.iter().flatten().map(|a| a.im));
                row.extend(s.n_tilde);
            }
            t.push(&row);
        }
    }
    t
}

pub(crate) fn phase_table(map: &PhaseMap) -> Table {
    let mut t = Table::new("phase", &["px", "py", "re_a", "im_a", "phase"]);
    let g = &map.grid;
    for j in 0..g.py.count {
        for i in 0..g.px.count {
            let p = g.point(i, j);
            let a = map.amplitude[g.index(i, j)];
            t.push(&[p.x, p.y, a.re, a.im, map.phase_at(i, j)]);
        }
    }
    t
}

pub(crate) fn singularity_table(records: &[SingularityRecord]) -> Table {
    let mut t = Table::new("singularities", &["cell_i", "cell_j", "px", "py", "winding", "class", "min_modulus"]);
    for r in records {
        t.push_cells(vec![
            r.i.to_string(),
            r.j.to_string(),
            num(r.center.x),
            num(r.center.y),
            r.winding.to_string(),
            r.class.name().into(),
            num(r.min_modulus),
        ]);
    }
    t
}
