//! Momentum-grid sweeps over the three solvers.
//!
//! Rows of the grid are distributed over a private rayon pool. Every point is
//! computed independently and rows are reassembled in order, so the output
//! does not depend on the number of workers.

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::bispinor::BispinorBasis;
use crate::dhw::{self, DhwError};
use crate::odeint::IntegratorSpec;
use crate::pulse::{PulseConfig, TimeWindow};
use crate::smatrix::{self, SmatrixError, Variant};
use crate::spinorial::{self, Species, SpinorialError};

/// Denominator floor for relative differences.
pub const REL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.max
        } else {
            self.min + self.step() * k as f64
        }
    }
}

/// Rectangular `(p_x, p_y)` grid on the plane `p_z = pz`.
///
/// Points are stored row-major with `p_y` as the slow index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub px: Axis,
    pub py: Axis,
    pub pz: f64,
}

impl MomentumGrid {
    pub fn new(px: Axis, py: Axis, pz: f64) -> Result<Self, ScanError> {
        let g = MomentumGrid { px, py, pz };
        g.validate()?;
        Ok(g)
    }

    /// `n x n` points over `[-half, half]^2` at `p_z = 0`.
    pub fn square(half: f64, n: usize) -> Result<Self, ScanError> {
        Self::new(Axis::new(-half, half, n), Axis::new(-half, half, n), 0.0)
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        for (name, a) in [("px", &self.px), ("py", &self.py)] {
            if a.count < 2 {
                return Err(ScanError::InvalidGrid { axis: name, reason: format!("count = {} must be at least 2", a.count) });
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(ScanError::InvalidGrid { axis: name, reason: format!("need min < max, got [{}, {}]", a.min, a.max) });
            }
        }
        if !self.pz.is_finite() {
            return Err(ScanError::InvalidGrid { axis: "pz", reason: format!("{} is not finite", self.pz) });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.px.count * self.py.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.px.count + i
    }

    pub fn point(&self, i: usize, j: usize) -> Vector3<f64> {
        Vector3::new(self.px.value(i), self.py.value(j), self.pz)
    }

    /// Grid indices nearest to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let snap = |a: &Axis, v: f64| (((v - a.min) / a.step()).round().max(0.0) as usize).min(a.count - 1);
        (snap(&self.px, x), snap(&self.py, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Smatrix,
    Dhw,
    Spinorial,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Smatrix, Method::Dhw, Method::Spinorial];

    pub fn name(self) -> &'static str {
        match self {
            Method::Smatrix => "smatrix",
            Method::Dhw => "dhw",
            Method::Spinorial => "spinorial",
        }
    }

    /// Fails early for combinations a backend cannot handle.
    pub fn check(self, pulse: &PulseConfig) -> Result<(), ScanError> {
        if self == Method::Spinorial && !pulse.is_linear() {
            return Err(ScanError::Backend(BackendError::Spinorial(SpinorialError::UnsupportedPolarization { delta: pulse.delta })));
        }
        Ok(())
    }
}

impl std::str::FromStr for Method {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "smatrix" | "s-matrix" | "dirac" => Ok(Method::Smatrix),
            "dhw" | "wigner" => Ok(Method::Dhw),
            "spinorial" | "spinor" => Ok(Method::Spinorial),
            _ => Err(ScanError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error(transparent)]
    Smatrix(#[from] SmatrixError),
    #[error(transparent)]
    Dhw(#[from] DhwError),
    #[error(transparent)]
    Spinorial(#[from] SpinorialError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid grid axis {axis}: {reason}")]
    InvalidGrid { axis: &'static str, reason: String },
    #[error("unknown method {0:?} (expected smatrix, dhw or spinorial)")]
    UnknownMethod(String),
    #[error("parallelism must be positive")]
    ZeroParallelism,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Backend(BackendError),
    #[error("at p = ({px:e}, {py:e}, {pz:e}): {source}")]
    AtPoint { px: f64, py: f64, pz: f64, source: BackendError },
}

/// Everything except the momentum that fixes a single-point computation.
#[derive(Debug, Clone, Copy)]
pub struct Problem {
    pub pulse: PulseConfig,
    pub window: TimeWindow,
    pub spec: IntegratorSpec,
    pub basis: BispinorBasis,
    pub variant: Variant,
}

/// Per-point payload. Only the S-matrix backend fills `resolved`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub f_total: f64,
    pub resolved: Option<Resolved>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    /// `f[cond][out]`.
    pub f: [[f64; 2]; 2],
    pub amplitude: [[Complex64; 2]; 2],
    pub n_tilde: [f64; 2],
}

/// Evaluates one backend at one momentum.
pub fn evaluate(method: Method, p: &Vector3<f64>, problem: &Problem) -> Result<PointValue, BackendError> {
    let Problem { pulse, window, spec, basis, variant } = problem;
    Ok(match method {
        Method::Smatrix => {
            let r = smatrix::pair_distributions(p, *variant, pulse, *basis, *window, spec)?;
            PointValue {
                f_total: r.f_total(),
                resolved: Some(Resolved { f: r.f, amplitude: r.amplitude, n_tilde: r.n_tilde }),
            }
        }
        Method::Dhw => PointValue { f_total: dhw::dhw_distribution(p, *variant, pulse, *window, spec)?, resolved: None },
        Method::Spinorial => {
            let species = match variant {
                Variant::Feynman => Species::Electron,
                Variant::AntiFeynman => Species::Positron,
            };
            PointValue { f_total: spinorial::spinorial_distribution(p, species, pulse, *window, spec)?, resolved: None }
        }
    })
}

/// Applies `f` at every grid point on `parallelism` workers; the result is
/// in grid order. The first failing point in grid order is reported.
pub fn map_grid<T, F>(grid: &MomentumGrid, parallelism: usize, f: F) -> Result<Vec<T>, ScanError>
where
    T: Send,
    F: Fn(&Vector3<f64>) -> Result<T, BackendError> + Sync,
{
    grid.validate()?;
    if parallelism == 0 {
        return Err(ScanError::ZeroParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build().map_err(|e| ScanError::Pool(e.to_string()))?;
    let rows: Vec<Result<Vec<T>, ScanError>> = pool.install(|| {
        (0..grid.py.count)
            .into_par_iter()
            .map(|j| {
                (0..grid.px.count)
                    .map(|i| {
                        let p = grid.point(i, j);
                        f(&p).map_err(|source| ScanError::AtPoint { px: p.x, py: p.y, pz: p.z, source })
                    })
                    .collect()
            })
            .collect()
    });
    let mut out = Vec::with_capacity(grid.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// Applies `f` to a list of momenta on `parallelism` workers, keeping order.
pub fn map_points<T, F>(points: &[Vector3<f64>], parallelism: usize, f: F) -> Result<Vec<T>, ScanError>
where
    T: Send,
    F: Fn(&Vector3<f64>) -> Result<T, BackendError> + Sync,
{
    if parallelism == 0 {
        return Err(ScanError::ZeroParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build().map_err(|e| ScanError::Pool(e.to_string()))?;
    let out: Vec<Result<T, ScanError>> = pool.install(|| {
        points.par_iter().map(|p| f(p).map_err(|source| ScanError::AtPoint { px: p.x, py: p.y, pz: p.z, source })).collect()
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub grid: MomentumGrid,
    pub method: Method,
    pub variant: Variant,
    pub basis: BispinorBasis,
    pub pulse: PulseConfig,
    pub window: TimeWindow,
    pub spec: IntegratorSpec,
    pub values: Vec<PointValue>,
    pub wall_time: Duration,
}

impl GridResult {
    pub fn at(&self, i: usize, j: usize) -> &PointValue {
        &self.values[self.grid.index(i, j)]
    }

    pub fn f_total(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.f_total).collect()
    }

    /// Indices and value of the largest `f_total`; the first in grid order
    /// wins ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for j in 0..self.grid.py.count {
            for i in 0..self.grid.px.count {
                let v = self.at(i, j).f_total;
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }
}

pub fn scan_grid(grid: &MomentumGrid, method: Method, problem: &Problem, parallelism: usize) -> Result<GridResult, ScanError> {
    method.check(&problem.pulse)?;
    let start = Instant::now();
    let values = map_grid(grid, parallelism, |p| evaluate(method, p, problem))?;
    Ok(GridResult {
        grid: *grid,
        method,
        variant: problem.variant,
        basis: problem.basis,
        pulse: problem.pulse,
        window: problem.window,
        spec: problem.spec,
        values,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffReport {
    pub max_abs: f64,
    /// Momentum at which `max_abs` occurs.
    pub at_abs: Vector3<f64>,
    pub max_rel: f64,
    pub at_rel: Vector3<f64>,
}

/// Pointwise comparison of two value lists sampled on `grid`.
///
/// The relative difference is `|a - b| / max(|a|, |b|, REL_FLOOR)`.
pub fn diff(grid: &MomentumGrid, a: &[f64], b: &[f64]) -> DiffReport {
    assert_eq!(a.len(), grid.len());
    assert_eq!(b.len(), grid.len());
    let mut r = DiffReport { max_abs: 0.0, at_abs: grid.point(0, 0), max_rel: 0.0, at_rel: grid.point(0, 0) };
    for j in 0..grid.py.count {
        for i in 0..grid.px.count {
            let k = grid.index(i, j);
            let d = (a[k] - b[k]).abs();
            let rel = d / a[k].abs().max(b[k].abs()).max(REL_FLOOR);
            if d > r.max_abs {
                r.max_abs = d;
                r.at_abs = grid.point(i, j);
            }
            if rel > r.max_rel {
                r.max_rel = rel;
                r.at_rel = grid.point(i, j);
            }
        }
    }
    r
}

pub fn compare_methods(
    grid: &MomentumGrid,
    method_a: Method,
    method_b: Method,
    problem: &Problem,
    parallelism: usize,
) -> Result<DiffReport, ScanError> {
    method_a.check(&problem.pulse)?;
    method_b.check(&problem.pulse)?;
    let a = scan_grid(grid, method_a, problem, parallelism)?.f_total();
    let b = if method_b == method_a { a.clone() } else { scan_grid(grid, method_b, problem, parallelism)?.f_total() };
    Ok(diff(grid, &a, &b))
}

/// Compares the anti-Feynman distribution at `p` with the Feynman
/// distribution at `-p`, both computed by `method`.
pub fn reflection_check(grid: &MomentumGrid, method: Method, problem: &Problem, parallelism: usize) -> Result<DiffReport, ScanError> {
    method.check(&problem.pulse)?;
    let anti = Problem { variant: Variant::AntiFeynman, ..*problem };
    let feyn = Problem { variant: Variant::Feynman, ..*problem };
    let a = map_grid(grid, parallelism, |p| evaluate(method, p, &anti).map(|v| v.f_total))?;
    let b = map_grid(grid, parallelism, |p| evaluate(method, &-p, &feyn).map(|v| v.f_total))?;
    Ok(diff(grid, &a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(pulse: PulseConfig) -> Problem {
        Problem {
            pulse,
            window: pulse.integration_window(crate::pulse::DEFAULT_EPS_A).unwrap(),
            spec: IntegratorSpec::default(),
            basis: BispinorBasis::z(),
            variant: Variant::Feynman,
        }
    }

    #[test]
    fn axis_endpoints_exact() {
        let a = Axis::new(-2.0, 2.0, 7);
        assert_eq!(a.value(0), -2.0);
        assert_eq!(a.value(6), 2.0);
        assert!((a.value(3)).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(MomentumGrid::square(1.0, 1), Err(ScanError::InvalidGrid { axis: "px", .. })));
        assert!(MomentumGrid::new(Axis::new(0.0, 1.0, 3), Axis::new(1.0, 1.0, 3), 0.0).is_err());
        let g = MomentumGrid::new(Axis::new(0.0, 1.0, 3), Axis::new(-1.0, 1.0, 5), 0.25).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.point(2, 4), Vector3::new(1.0, 1.0, 0.25));
        assert_eq!(g.index(2, 1), 5);
        assert_eq!(g.nearest(0.4, -0.9), (1, 0));
    }

    #[test]
    fn no_field_gives_zeros() {
        let pr = problem(PulseConfig::sauter_like(0.0, 2.0, 0.3));
        let g = MomentumGrid::square(1.5, 8).unwrap();
        for m in Method::ALL {
            let r = scan_grid(&g, m, &pr, 2).unwrap();
            assert!(r.values.iter().all(|v| v.f_total == 0.0), "{}", m.name());
        }
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let pr = problem(PulseConfig::oscillating(0.4, 2.0, 0.3, 1.0, 0.2));
        let g = MomentumGrid::square(1.0, 5).unwrap();
        let a = scan_grid(&g, Method::Smatrix, &pr, 1).unwrap();
        let b = scan_grid(&g, Method::Smatrix, &pr, 3).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn identical_methods_have_zero_difference() {
        let pr = problem(PulseConfig::sauter_like(0.5, 2.0, 0.5));
        let g = MomentumGrid::square(1.0, 4).unwrap();
        let r = compare_methods(&g, Method::Dhw, Method::Dhw, &pr, 1).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert_eq!(r.max_rel, 0.0);
    }

    #[test]
    fn spinorial_rejected_before_integration() {
        let pr = problem(PulseConfig::elliptic(0.5, 2.0, 0.0, 1.0, 0.0, 0.7));
        let g = MomentumGrid::square(1.0, 3).unwrap();
        let r = scan_grid(&g, Method::Spinorial, &pr, 1);
        assert!(matches!(r, Err(ScanError::Backend(BackendError::Spinorial(SpinorialError::UnsupportedPolarization { .. })))));
    }

    #[test]
    fn errors_carry_coordinates() {
        let g = MomentumGrid::new(Axis::new(0.0, 1.0, 2), Axis::new(0.0, 1.0, 2), 0.0).unwrap();
        let r: Result<Vec<()>, _> = map_grid(&g, 2, |p| {
            if p.x > 0.5 && p.y > 0.5 {
                Err(BackendError::Dhw(DhwError::Integrator(crate::odeint::OdeError::TooManySteps(1))))
            } else {
                Ok(())
            }
        });
        match r {
            Err(ScanError::AtPoint { px, py, .. }) => assert_eq!((px, py), (1.0, 1.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relative_difference_floor() {
        let g = MomentumGrid::new(Axis::new(0.0, 1.0, 2), Axis::new(0.0, 1.0, 2), 0.0).unwrap();
        let r = diff(&g, &[0.0, 0.0, 1.0, 2.0], &[0.0, 1e-14, 1.0, 2.2]);
        assert!((r.max_rel - 0.2 / 2.2).abs() < 1e-15);
        assert_eq!(r.at_rel, Vector3::new(1.0, 1.0, 0.0));
        assert!((r.max_abs - 0.2).abs() < 1e-15);
    }
}
