//! Phase singularities of amplitude maps.
//!
//! The circulation around an elementary plaquette is the sum of the four
//! edge phase differences, each wrapped into `(-pi, pi]`, divided by `2 pi`.
//! A nonzero circulation marks an isolated zero (a vortex). Lines where the
//! amplitude changes sign carry a `pi` jump but no circulation; these are
//! reported separately as nodal segments.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use thiserror::Error;

use crate::pulse::TimeWindow;
use crate::scan::{map_grid, BackendError, MomentumGrid, Problem, ScanError};
use crate::smatrix::{self, Spin};

type C = Complex64;

/// Snap residual above which a plaquette circulation is rejected.
pub const SNAP_TOLERANCE: f64 = 0.25;
/// Edge phase steps larger than this fraction of `pi` are ambiguous.
pub const AMBIGUOUS_EDGE: f64 = 0.9;
/// Nodal cells have `|A|` below this fraction of the map maximum.
pub const NODAL_THRESHOLD: f64 = 1e-3;
/// Minimum number of collinear cells in a nodal segment.
pub const NODAL_MIN_RUN: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    #[error("plaquette ({i}, {j}) circulation {circulation} is {residual} away from an integer")]
    UnresolvedWinding { i: usize, j: usize, circulation: f64, residual: f64 },
    #[error("amplitude list has {got} entries, grid has {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("reference phase needs t_f > t_i, got [{t_i}, {t_f}]")]
    InvalidWindow { t_i: f64, t_f: f64 },
    #[error(transparent)]
    Scan(#[from] ScanError),
}

/// `eta sqrt(p^2 + 1) (t_f - t_i)`.
pub fn reference_phase(p: &Vector3<f64>, eta: f64, t_i: f64, t_f: f64) -> f64 {
    eta * (p.norm_squared() + 1.0).sqrt() * (t_f - t_i)
}

/// Multiplies `a` by `exp(i phi)` after reducing `phi` modulo `2 pi`.
pub fn apply_reference(a: C, phi: f64) -> C {
    a * C::from_polar(1.0, phi.rem_euclid(TAU))
}

/// Restores the free phase the solver strips off: the produced component
/// and the prescribed conditioning component each carry `exp(-+ i p0 t_f)`
/// at the end of the run.
pub fn free_phase_amplitude(a: C, p: &Vector3<f64>, t_f: f64) -> C {
    let p0 = (p.norm_squared() + 1.0).sqrt();
    apply_reference(a, -2.0 * p0 * t_f)
}

/// Wraps into `(-pi, pi]`.
pub fn wrap(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(TAU) - PI;
    if r <= -PI { r + TAU } else { r }
}

/// Argument in `(-pi, pi]`.
pub fn phase_of(a: C) -> f64 {
    let t = a.arg();
    if t <= -PI { t + TAU } else { t }
}

#[derive(Debug, Clone)]
pub struct PhaseMap {
    pub grid: MomentumGrid,
    /// Amplitude before the reference phase is applied.
    pub amplitude: Vec<C>,
    /// `arg(exp(i phi) A)`.
    pub phase: Vec<f64>,
    pub eta: f64,
    pub window: TimeWindow,
}

impl PhaseMap {
    pub fn new(grid: MomentumGrid, amplitude: Vec<C>, eta: f64, window: TimeWindow) -> Result<Self, VortexError> {
        if amplitude.len() != grid.len() {
            return Err(VortexError::ShapeMismatch { got: amplitude.len(), expected: grid.len() });
        }
        if !(window.t_f > window.t_i) {
            return Err(VortexError::InvalidWindow { t_i: window.t_i, t_f: window.t_f });
        }
        let mut phase = Vec::with_capacity(grid.len());
        for j in 0..grid.py.count {
            for i in 0..grid.px.count {
                let p = grid.point(i, j);
                let phi = reference_phase(&p, eta, window.t_i, window.t_f);
                phase.push(phase_of(apply_reference(amplitude[grid.index(i, j)], phi)));
            }
        }
        Ok(PhaseMap { grid, amplitude, phase, eta, window })
    }

    pub fn phase_at(&self, i: usize, j: usize) -> f64 {
        self.phase[self.grid.index(i, j)]
    }

    pub fn modulus_at(&self, i: usize, j: usize) -> f64 {
        self.amplitude[self.grid.index(i, j)].norm()
    }

    pub fn max_modulus(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// Plaquette windings; cell `(i, j)` has lower-left corner at grid point
/// `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Windings {
    pub nx: usize,
    pub ny: usize,
    pub winding: Vec<i32>,
    pub residual: Vec<f64>,
    /// Largest `|wrapped edge step|` around the cell.
    pub max_edge: Vec<f64>,
}

impl Windings {
    pub fn at(&self, i: usize, j: usize) -> i32 {
        self.winding[j * self.nx + i]
    }

    pub fn total(&self) -> i64 {
        self.winding.iter().map(|&w| w as i64).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

fn circulation(phases: &[f64]) -> (f64, f64) {
    let n = phases.len();
    let mut sum = 0.0;
    let mut edge = 0.0_f64;
    for k in 0..n {
        let d = wrap(phases[(k + 1) % n] - phases[k]);
        edge = edge.max(d.abs());
        sum += d;
    }
    (sum / TAU, edge)
}

fn snap(circ: f64) -> (i32, f64) {
    let w = circ.round();
    (w as i32, (circ - w).abs())
}

/// Counterclockwise circulation of every elementary plaquette.
pub fn winding_numbers(map: &PhaseMap) -> Result<Windings, VortexError> {
    let (nx, ny) = (map.grid.px.count - 1, map.grid.py.count - 1);
    let mut out = Windings { nx, ny, winding: Vec::with_capacity(nx * ny), residual: Vec::with_capacity(nx * ny), max_edge: Vec::with_capacity(nx * ny) };
    for j in 0..ny {
        for i in 0..nx {
            let ring = [map.phase_at(i, j), map.phase_at(i + 1, j), map.phase_at(i + 1, j + 1), map.phase_at(i, j + 1)];
            let (circ, edge) = circulation(&ring);
            let (w, r) = snap(circ);
            if r > SNAP_TOLERANCE {
                return Err(VortexError::UnresolvedWinding { i, j, circulation: circ, residual: r });
            }
            out.winding.push(w);
            out.residual.push(r);
            out.max_edge.push(edge);
        }
    }
    Ok(out)
}

/// Counterclockwise circulation along the outer boundary of the grid.
pub fn boundary_winding(map: &PhaseMap) -> Result<i32, VortexError> {
    let (nx, ny) = (map.grid.px.count, map.grid.py.count);
    let mut ring = Vec::with_capacity(2 * (nx + ny));
    ring.extend((0..nx).map(|i| map.phase_at(i, 0)));
    ring.extend((1..ny).map(|j| map.phase_at(nx - 1, j)));
    ring.extend((0..nx - 1).rev().map(|i| map.phase_at(i, ny - 1)));
    ring.extend((1..ny - 1).rev().map(|j| map.phase_at(0, j)));
    let (circ, _) = circulation(&ring);
    let (w, r) = snap(circ);
    if r > SNAP_TOLERANCE {
        return Err(VortexError::UnresolvedWinding { i: 0, j: 0, circulation: circ, residual: r });
    }
    Ok(w)
}

/// Points along the closed counterclockwise polygon `vertices` at height
/// `pz`, with local spacing `spacing(p)`. Every vertex is included once.
pub fn contour_points(vertices: &[(f64, f64)], pz: f64, spacing: impl Fn(&Vector3<f64>) -> f64) -> Vec<Vector3<f64>> {
    let mut out = Vec::new();
    for k in 0..vertices.len() {
        let (a, b) = (vertices[k], vertices[(k + 1) % vertices.len()]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = dx.hypot(dy);
        let mut s = 0.0;
        while s < len {
            let p = Vector3::new(a.0 + dx * s / len, a.1 + dy * s / len, pz);
            out.push(p);
            s += spacing(&p).max(len * 1e-9);
        }
    }
    out
}

/// Corners of cell `(i, j)`, counterclockwise from the lower left.
pub fn cell_vertices(grid: &MomentumGrid, i: usize, j: usize) -> [(f64, f64); 4] {
    let (lo, hi) = (grid.point(i, j), grid.point(i + 1, j + 1));
    [(lo.x, lo.y), (hi.x, lo.y), (hi.x, hi.y), (lo.x, hi.y)]
}

/// Circulation of `exp(i phi) A` along a closed list of samples.
///
/// Returns `(winding, snap residual, largest |step|)`. The result is the true
/// winding once the samples resolve the phase; refining the contour, unlike
/// refining the grid, needs only the samples on the contour.
pub fn sampled_winding(points: &[Vector3<f64>], amplitude: &[C], eta: f64, window: TimeWindow) -> (i32, f64, f64) {
    let phases: Vec<f64> = points
        .iter()
        .zip(amplitude)
        .map(|(p, &a)| phase_of(apply_reference(a, reference_phase(p, eta, window.t_i, window.t_f))))
        .collect();
    let (circ, edge) = circulation(&phases);
    let (w, r) = snap(circ);
    (w, r, edge)
}

/// `|grad|` of the combined free and reference phase carried by
/// `exp(i phi) free_phase_amplitude(A)` at `p`.
pub fn lab_phase_gradient(p: &Vector3<f64>, eta: f64, window: TimeWindow) -> f64 {
    let rate = (eta * (window.t_f - window.t_i) - 2.0 * window.t_f).abs();
    let n = p.norm();
    rate * n / (n * n + 1.0).sqrt()
}

/// Amplitude `A(cond, out)` from the S-matrix solver with the free phase
/// restored.
pub fn lab_amplitude(p: &Vector3<f64>, problem: &Problem, cond: Spin, out: Spin) -> Result<C, BackendError> {
    let r = smatrix::pair_distributions(p, problem.variant, &problem.pulse, problem.basis, problem.window, &problem.spec)?;
    Ok(free_phase_amplitude(r.amplitude[cond.index()][out.index()], p, problem.window.t_f))
}

/// Phase map of `lab_amplitude` over `grid`.
pub fn amplitude_map(grid: &MomentumGrid, problem: &Problem, cond: Spin, out: Spin, eta: f64, parallelism: usize) -> Result<PhaseMap, VortexError> {
    let amp = map_grid(grid, parallelism, |p| lab_amplitude(p, problem, cond, out))?;
    PhaseMap::new(*grid, amp, eta, problem.window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Vortex,
    NodalLineSegment,
    /// Nonzero circulation with an edge step too close to `pi` to decide,
    /// or a cell touching `p = 0` in a helicity map.
    Unresolved,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Vortex => "vortex",
            Class::NodalLineSegment => "nodal",
            Class::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityRecord {
    pub i: usize,
    pub j: usize,
    /// Cell centre.
    pub center: Vector3<f64>,
    pub winding: i32,
    pub class: Class,
    /// Smallest `|A|` at the cell corners.
    pub min_modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Mark cells touching `p = 0` as convention dependent.
    pub helicity: bool,
}

fn cell_center(grid: &MomentumGrid, i: usize, j: usize) -> Vector3<f64> {
    (grid.point(i, j) + grid.point(i + 1, j + 1)) * 0.5
}

fn touches_origin(grid: &MomentumGrid, i: usize, j: usize) -> bool {
    let lo = grid.point(i, j);
    let hi = grid.point(i + 1, j + 1);
    grid.pz == 0.0 && lo.x <= 0.0 && hi.x >= 0.0 && lo.y <= 0.0 && hi.y >= 0.0
}

/// Minimum of `|(1 - u) a + u b|` over `u` in `[0, 1]`.
fn segment_min(a: C, b: C) -> f64 {
    let d = b - a;
    let dd = d.norm_sqr();
    if dd == 0.0 {
        return a.norm();
    }
    let u = (-(a.conj() * d).re / dd).clamp(0.0, 1.0);
    (a + d * u).norm()
}

/// True for a zero crossing between two samples: the linear interpolant
/// nearly vanishes and the phase turns by more than a right angle.
fn nodal_edge(map: &PhaseMap, a: (usize, usize), b: (usize, usize), floor: f64) -> bool {
    let g = &map.grid;
    let (za, zb) = (map.amplitude[g.index(a.0, a.1)], map.amplitude[g.index(b.0, b.1)]);
    let turn = wrap(map.phase_at(b.0, b.1) - map.phase_at(a.0, a.1)).abs();
    turn > PI / 2.0 && segment_min(za, zb) < floor
}

/// Finds runs of at least `NODAL_MIN_RUN` collinear cells crossed by a zero
/// line, then sorts the remaining nonzero circulations into vortices and
/// unresolved cells. Nodal records carry winding 0.
pub fn classify_singularities(map: &PhaseMap, windings: &Windings, options: ClassifyOptions) -> Vec<SingularityRecord> {
    let g = &map.grid;
    let (nx, ny) = (windings.nx, windings.ny);
    let floor = NODAL_THRESHOLD * map.max_modulus();
    let min_mod = |i: usize, j: usize| {
        [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].iter().map(|&(a, b)| map.modulus_at(a, b)).fold(f64::INFINITY, f64::min)
    };

    // A cell is crossed vertically when its horizontal edges both carry a
    // zero crossing, horizontally when its vertical edges do.
    let vertical = |i: usize, j: usize| nodal_edge(map, (i, j), (i + 1, j), floor) && nodal_edge(map, (i, j + 1), (i + 1, j + 1), floor);
    let horizontal = |i: usize, j: usize| nodal_edge(map, (i, j), (i, j + 1), floor) && nodal_edge(map, (i + 1, j), (i + 1, j + 1), floor);
    // Two near-pi steps of a sign change may add up to +-2 pi instead of
    // cancelling; such circulations do not count against a nodal cell.
    let open = |i: usize, j: usize| windings.at(i, j) == 0 || windings.max_edge[j * nx + i] > AMBIGUOUS_EDGE * PI;
    let mut nodal = vec![false; nx * ny];
    for i in 0..nx {
        let mut run = 0;
        for j in 0..=ny {
            if j < ny && open(i, j) && vertical(i, j) {
                run += 1;
            } else {
                if run >= NODAL_MIN_RUN {
                    (j - run..j).for_each(|jj| nodal[jj * nx + i] = true);
                }
                run = 0;
            }
        }
    }
    for j in 0..ny {
        let mut run = 0;
        for i in 0..=nx {
            if i < nx && open(i, j) && horizontal(i, j) {
                run += 1;
            } else {
                if run >= NODAL_MIN_RUN {
                    (i - run..i).for_each(|ii| nodal[j * nx + ii] = true);
                }
                run = 0;
            }
        }
    }

    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let mut w = windings.at(i, j);
            let class = if nodal[j * nx + i] {
                w = 0;
                Class::NodalLineSegment
            } else if w != 0 {
                if (options.helicity && touches_origin(g, i, j)) || windings.max_edge[j * nx + i] > AMBIGUOUS_EDGE * PI {
                    Class::Unresolved
                } else {
                    Class::Vortex
                }
            } else {
                continue;
            };
            out.push(SingularityRecord { i, j, center: cell_center(g, i, j), winding: w, class, min_modulus: min_mod(i, j) });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::Axis;
    use proptest::prelude::*;

    fn map_of(grid: MomentumGrid, f: impl Fn(f64, f64) -> C, eta: f64) -> PhaseMap {
        let mut amp = Vec::new();
        for j in 0..grid.py.count {
            for i in 0..grid.px.count {
                let p = grid.point(i, j);
                amp.push(f(p.x, p.y));
            }
        }
        PhaseMap::new(grid, amp, eta, TimeWindow::new(-20.0, 200.0)).unwrap()
    }

    fn grid(n: usize) -> MomentumGrid {
        // Offset so no sample lands exactly on a synthetic zero.
        MomentumGrid::new(Axis::new(-1.03, 0.97, n), Axis::new(-1.01, 0.99, n), 0.0).unwrap()
    }

    const NO_HELICITY: ClassifyOptions = ClassifyOptions { helicity: false };

    #[test]
    fn reference_phase_values() {
        assert!((reference_phase(&Vector3::zeros(), 1.8, -20.0, 200.0) - 396.0).abs() < 1e-12);
        assert_eq!(reference_phase(&Vector3::new(0.3, -1.0, 2.0), 0.0, -20.0, 200.0), 0.0);
        let p = Vector3::new(0.3, -1.0, 2.0);
        assert_eq!(reference_phase(&p, 1.8, -20.0, 200.0), reference_phase(&-p, 1.8, -20.0, 200.0));
    }

    #[test]
    fn wrapping_range() {
        assert_eq!(wrap(PI), PI);
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(phase_of(C::new(-1.0, -0.0)), PI);
    }

    #[test]
    fn constant_phase_has_no_windings() {
        let m = map_of(grid(9), |_, _| C::new(0.3, -0.8), 0.0);
        let w = winding_numbers(&m).unwrap();
        assert!(w.winding.iter().all(|&k| k == 0));
        assert_eq!(boundary_winding(&m).unwrap(), 0);
        assert!(classify_singularities(&m, &w, NO_HELICITY).is_empty());
    }

    #[test]
    fn canonical_vortex_and_antivortex() {
        let a = 0.42;
        let g = grid(17);
        for (sign, f) in [(1, C::new(1.0, 1.0)), (-1, C::new(1.0, -1.0))] {
            let m = map_of(g, |x, y| if sign > 0 { C::new(x - a, y) } else { C::new(x - a, -y) } * f, 0.0);
            let w = winding_numbers(&m).unwrap();
            let cells: Vec<_> = (0..w.ny).flat_map(|j| (0..w.nx).map(move |i| (i, j))).filter(|&(i, j)| w.at(i, j) != 0).collect();
            assert_eq!(cells.len(), 1);
            let (i, j) = cells[0];
            assert_eq!(w.at(i, j), sign);
            let (lo, hi) = (g.point(i, j), g.point(i + 1, j + 1));
            assert!(lo.x < a && a < hi.x && lo.y < 0.0 && 0.0 < hi.y);
            assert_eq!(boundary_winding(&m).unwrap(), sign);
            let recs = classify_singularities(&m, &w, NO_HELICITY);
            assert_eq!(recs.len(), 1);
            assert_eq!(recs[0].class, Class::Vortex);
            assert_eq!(recs[0].winding, sign);
        }
    }

    #[test]
    fn sign_change_line_is_nodal() {
        // Real amplitude changing sign across x = 0.2 with a slow phase.
        let g = grid(21);
        let m = map_of(g, |x, y| C::from_polar(1.0, 0.3 * y) * (x - 0.2), 0.0);
        let w = winding_numbers(&m).unwrap();
        let recs = classify_singularities(&m, &w, NO_HELICITY);
        assert!(recs.iter().all(|r| r.class != Class::Vortex), "{recs:?}");
        let nodal: Vec<_> = recs.iter().filter(|r| r.class == Class::NodalLineSegment).collect();
        assert!(nodal.len() >= g.py.count - 1 - 2);
        assert!(nodal.iter().all(|r| (r.center.x - 0.2).abs() < g.px.step()));
    }

    #[test]
    fn helicity_origin_cells_excluded() {
        let g = grid(11);
        let m = map_of(g, |x, y| C::new(x, y), 0.0);
        let w = winding_numbers(&m).unwrap();
        let recs = classify_singularities(&m, &w, ClassifyOptions { helicity: true });
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].class, Class::Unresolved);
        let recs = classify_singularities(&m, &w, NO_HELICITY);
        assert_eq!(recs[0].class, Class::Vortex);
    }

    #[test]
    fn contour_sampling_recovers_winding_under_fast_phase() {
        let w = TimeWindow::new(-20.0, 200.0);
        let f = |p: &Vector3<f64>| C::new(p.x - 0.1, p.y + 0.05) * C::new(p.x + 0.3, -(p.y - 0.2));
        let spacing = |p: &Vector3<f64>| (0.5 / lab_phase_gradient(p, 0.0, w)).min(0.01);
        for (verts, expect) in [([(0.0, -0.1), (0.2, -0.1), (0.2, 0.1), (0.0, 0.1)], 1), ([(-0.4, 0.1), (-0.2, 0.1), (-0.2, 0.3), (-0.4, 0.3)], -1)] {
            let pts = contour_points(&verts, 0.0, spacing);
            let amp: Vec<C> = pts.iter().map(|p| free_phase_amplitude(f(p), p, w.t_f)).collect();
            for eta in [0.0, 1.8] {
                let (k, r, edge) = sampled_winding(&pts, &amp, eta, w);
                assert_eq!(k, expect);
                assert!(r < 1e-9 && edge < 1.0, "{edge}");
            }
        }
    }

    #[test]
    fn contour_points_cover_vertices() {
        let pts = contour_points(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.5)], 0.2, |_| 0.3);
        assert_eq!(pts[0], Vector3::new(0.0, 0.0, 0.2));
        assert!(pts.contains(&Vector3::new(1.0, 0.0, 0.2)));
        assert!(pts.contains(&Vector3::new(1.0, 0.5, 0.2)));
        assert_eq!(pts.len(), 4 + 2 + 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn discrete_stokes(
            zeros in proptest::collection::vec((-0.9..0.9f64, -0.9..0.9f64, proptest::bool::ANY), 0..5),
            n in 6usize..20,
        ) {
            let g = grid(n);
            let m = map_of(g, |x, y| zeros.iter().fold(C::from(1.0), |acc, &(a, b, s)| {
                acc * if s { C::new(x - a, y - b) } else { C::new(x - a, b - y) }
            }), 0.0);
            let w = winding_numbers(&m).unwrap();
            prop_assert_eq!(w.total(), boundary_winding(&m).unwrap() as i64);
            prop_assert!(w.max_residual() < 1e-9);
        }

        #[test]
        fn global_phase_invariance(shift in -10.0..10.0f64, a in -0.8..0.8f64, b in -0.8..0.8f64) {
            let g = grid(12);
            let f = |x: f64, y: f64| C::new(x - a, y - b) * C::new(x + b, y + a);
            let m0 = map_of(g, f, 0.0);
            let m1 = map_of(g, |x, y| f(x, y) * C::from_polar(1.0, shift), 0.0);
            prop_assert_eq!(winding_numbers(&m0).unwrap().winding, winding_numbers(&m1).unwrap().winding);
        }

        #[test]
        fn resolved_smooth_phase_field_invariance(eta in 0.0..0.004f64, a in -0.8..0.8f64, b in -0.8..0.8f64) {
            // The added field turns by well under pi per cell. Circulations
            // agree wherever neither map has an edge step close to pi.
            let g = grid(16);
            let f = |x: f64, y: f64| C::new(x - a, y - b);
            let w0 = winding_numbers(&map_of(g, f, 0.0)).unwrap();
            let w1 = winding_numbers(&map_of(g, f, eta)).unwrap();
            for k in 0..w0.winding.len() {
                if w0.max_edge[k].max(w1.max_edge[k]) < AMBIGUOUS_EDGE * PI {
                    prop_assert_eq!(w0.winding[k], w1.winding[k]);
                }
            }
            prop_assert_eq!(w0.total(), w1.total());
        }
    }
}
