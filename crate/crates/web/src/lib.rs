//! Browser bindings: field traces, momentum maps and phase maps driven by
//! the same TOML configuration as the command-line tool.
//!
//! Points are evaluated one after another on the calling thread.

use wasm_bindgen::prelude::*;

use vacuum_pairs::bispinor::BispinorBasis;
use vacuum_pairs::cli::{parse_config, RunConfig};
use vacuum_pairs::scan;
use vacuum_pairs::vortex::{self, ClassifyOptions, PhaseMap};

/// Values on a momentum grid, row-major with `p_x` fastest.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct GridValues {
    nx: usize,
    ny: usize,
    px: [f64; 2],
    py: [f64; 2],
    values: Vec<f64>,
    singularities: Vec<f64>,
}

#[wasm_bindgen]
impl GridValues {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// `[px_min, px_max, py_min, py_max]`.
    #[wasm_bindgen(getter)]
    pub fn extent(&self) -> Vec<f64> {
        vec![self.px[0], self.px[1], self.py[0], self.py[1]]
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Flat `[px, py, winding, class]` records; class is 0 for a vortex,
    /// 1 for a nodal segment and 2 for an unresolved cell.
    #[wasm_bindgen(getter)]
    pub fn singularities(&self) -> Vec<f64> {
        self.singularities.clone()
    }
}

fn config(text: &str) -> Result<RunConfig, String> {
    parse_config(text, &[]).map_err(|e| e.to_string())
}

fn shell(cfg: &RunConfig) -> Result<GridValues, String> {
    let g = cfg.grid().map_err(|e| e.to_string())?;
    Ok(GridValues {
        nx: g.px.count,
        ny: g.py.count,
        px: [g.px.min, g.px.max],
        py: [g.py.min, g.py.max],
        values: Vec::with_capacity(g.len()),
        singularities: Vec::new(),
    })
}

/// Flat `[t, E_x, E_y, E_z]` rows at `samples` equally spaced times over
/// the integration window.
pub fn field_trace(text: &str, samples: usize) -> Result<Vec<f64>, String> {
    let cfg = config(text)?;
    let pulse = cfg.pulse().map_err(|e| e.to_string())?;
    let w = cfg.window().map_err(|e| e.to_string())?;
    let n = samples.max(2);
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let t = w.t_i + w.duration() * k as f64 / (n - 1) as f64;
        let e = pulse.field(t);
        out.extend([t, e.x, e.y, e.z]);
    }
    Ok(out)
}

/// Total distribution over the configured grid with the configured method.
pub fn distribution(text: &str) -> Result<GridValues, String> {
    let cfg = config(text)?;
    let pr = cfg.problem().map_err(|e| e.to_string())?;
    let method = cfg.method().map_err(|e| e.to_string())?;
    let g = cfg.grid().map_err(|e| e.to_string())?;
    let mut out = shell(&cfg)?;
    for j in 0..g.py.count {
        for i in 0..g.px.count {
            let v = scan::evaluate(method, &g.point(i, j), &pr).map_err(|e| e.to_string())?;
            out.values.push(v.f_total);
        }
    }
    Ok(out)
}

/// Phase of the amplitude `command.cond`, `command.out` with the free phase
/// restored and the reference phase at `solver.eta`, plus the classified
/// singular cells.
pub fn phase(text: &str) -> Result<GridValues, String> {
    let cfg = config(text)?;
    let pr = cfg.problem().map_err(|e| e.to_string())?;
    let (cond, out_spin) = (cfg.cond().map_err(|e| e.to_string())?, cfg.out().map_err(|e| e.to_string())?);
    let g = cfg.grid().map_err(|e| e.to_string())?;
    let mut amp = Vec::with_capacity(g.len());
    for j in 0..g.py.count {
        for i in 0..g.px.count {
            amp.push(vortex::lab_amplitude(&g.point(i, j), &pr, cond, out_spin).map_err(|e| e.to_string())?);
        }
    }
    let map = PhaseMap::new(g, amp, cfg.solver.eta, pr.window).map_err(|e| e.to_string())?;
    let windings = vortex::winding_numbers(&map).map_err(|e| e.to_string())?;
    let records = vortex::classify_singularities(&map, &windings, ClassifyOptions { helicity: pr.basis == BispinorBasis::Helicity });
    let mut out = shell(&cfg)?;
    for j in 0..g.py.count {
        for i in 0..g.px.count {
            out.values.push(map.phase_at(i, j));
        }
    }
    for r in records {
        let class = match r.class {
            vortex::Class::Vortex => 0.0,
            vortex::Class::NodalLineSegment => 1.0,
            vortex::Class::Unresolved => 2.0,
        };
        out.singularities.extend([r.center.x, r.center.y, r.winding as f64, class]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = fieldTrace)]
pub fn field_trace_js(config: &str, samples: usize) -> Result<Vec<f64>, JsError> {
    field_trace(config, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = distribution)]
pub fn distribution_js(config: &str) -> Result<GridValues, JsError> {
    distribution(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = phase)]
pub fn phase_js(config: &str) -> Result<GridValues, JsError> {
    phase(config).map_err(|e| JsError::new(&e))
}
