//! Kinetic solver built on the equal-time Wigner function of the Dirac field.
//!
//! For a homogeneous electric field ten Wigner coefficients survive,
//! `W = (f3, g0, g1, g2)`, and each evolves along the classical
//! characteristic `p(t) = p - e A(t)` as `dW/dt = M(p(t)) W`. Splitting off
//! the vacuum direction `e1 = (1, 0, p, 0) / p0` leaves the distribution
//! `f_W` and a nine-component remainder `w9 = (v1, v2, v3)`, which is the form
//! integrated in production. The raw ten-component form is kept as a check.

use nalgebra::{SMatrix, SVector, Vector3};
use thiserror::Error;

use crate::odeint::{self, IntegratorSpec, OdeError};
use crate::pulse::{PulseConfig, TimeWindow};
use crate::smatrix::Variant;

/// `[f_W, v1, v2, v3]` flattened.
pub type DhwState = [f64; 10];

/// `[f3, g0, g1, g2]` flattened.
pub type RawDhwVector = [f64; 10];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DhwError {
    #[error(transparent)]
    Integrator(#[from] OdeError),
}

const E: f64 = -1.0;

fn v3(s: &[f64; 10], k: usize) -> Vector3<f64> {
    Vector3::new(s[k], s[k + 1], s[k + 2])
}

fn put(s: &mut [f64; 10], k: usize, v: &Vector3<f64>) {
    s[k] = v.x;
    s[k + 1] = v.y;
    s[k + 2] = v.z;
}

/// Reduced right-hand side at kinetic momentum `p`, with `p0 = sqrt(p^2 + 1)`
/// and field `e_t`. The source term carries `f - 1` for Feynman-type and
/// `f + 1` for anti-Feynman-type vacuum conditions.
pub fn dhw_rhs(s: &DhwState, p: &Vector3<f64>, p0: f64, e_t: &Vector3<f64>, variant: Variant) -> DhwState {
    let f = s[0];
    let v1 = v3(s, 1);
    let v2 = v3(s, 4);
    let w3 = v3(s, 7);
    let shift = match variant {
        Variant::Feynman => f - 1.0,
        Variant::AntiFeynman => f + 1.0,
    };
    let e_v1 = e_t.dot(&v1);
    let df = E * e_v1 / (2.0 * p0);
    let dv1 = (p * p.dot(e_t) - e_t * (p0 * p0)) * (2.0 * E / (p0 * p0 * p0) * shift) - p * (E * e_v1 / (p0 * p0))
        + p.cross(&v2) * 2.0
        - w3 * 2.0;
    let dv2 = p.cross(&v1) * 2.0;
    let dv3 = (p * p.dot(&v1) + v1) * 2.0;
    let mut out = [0.0; 10];
    out[0] = df;
    put(&mut out, 1, &dv1);
    put(&mut out, 4, &dv2);
    put(&mut out, 7, &dv3);
    out
}

/// Kinetic momentum along the characteristic.
pub fn kinetic_momentum(p: &Vector3<f64>, a: &Vector3<f64>) -> Vector3<f64> {
    p - a * E
}

/// `f_W(t_f)` for the distribution at `p`.
///
/// Feynman type: the electron distribution, integrated at `p`. Anti-Feynman
/// type: the positron distribution, integrated at `-p`. The anti-Feynman
/// system sources `f + 1`; since the reduced system is linear in
/// `(f +- 1, w9)`, its solution from the same zero start is the negative of
/// the Feynman one and the distribution is read off with the opposite sign.
pub fn dhw_distribution(
    p: &Vector3<f64>,
    variant: Variant,
    pulse: &PulseConfig,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<f64, DhwError> {
    let (q, sign) = match variant {
        Variant::Feynman => (*p, 1.0),
        Variant::AntiFeynman => (-p, -1.0),
    };
    let s = evolve_reduced(&q, variant, pulse, window, spec)?;
    Ok(sign * s[0])
}

fn step_cap(q: &Vector3<f64>, pulse: &PulseConfig, spec: &IntegratorSpec) -> IntegratorSpec {
    let reach = q.norm() + pulse.e0.abs() * pulse.tau0;
    spec.resolving(2.0 * (reach * reach + 1.0).sqrt())
}

/// Reduced state at `t_f` from the vacuum start at `t_i`.
pub fn evolve_reduced(
    q: &Vector3<f64>,
    variant: Variant,
    pulse: &PulseConfig,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<DhwState, DhwError> {
    let spec = step_cap(q, pulse, spec);
    let sol = odeint::integrate(
        |t, s: &DhwState| {
            let (a, e) = pulse.potential_and_field(t);
            let pk = kinetic_momentum(q, &a);
            let p0 = (1.0 + pk.norm_squared()).sqrt();
            dhw_rhs(s, &pk, p0, &e, variant)
        },
        [0.0; 10],
        window.t_i,
        window.t_f,
        &spec,
    )?;
    Ok(sol.y)
}

/// `dW/dt = M(p) W`.
pub fn dhw_raw_rhs(w: &RawDhwVector, p: &Vector3<f64>) -> RawDhwVector {
    let g0 = v3(w, 1);
    let g1 = v3(w, 4);
    let g2 = v3(w, 7);
    let mut out = [0.0; 10];
    out[0] = 2.0 * p.dot(&g2);
    put(&mut out, 1, &(p.cross(&g1) * 2.0));
    put(&mut out, 4, &(p.cross(&g0) * 2.0 - g2 * 2.0));
    put(&mut out, 7, &(g1 * 2.0 - p * (2.0 * w[0])));
    out
}

/// The 10x10 matrix `M(p)`.
pub fn raw_matrix(p: &Vector3<f64>) -> SMatrix<f64, 10, 10> {
    let mut m = SMatrix::<f64, 10, 10>::zeros();
    for k in 0..10 {
        let mut e = [0.0; 10];
        e[k] = 1.0;
        let col = dhw_raw_rhs(&e, p);
        for (r, v) in col.iter().enumerate() {
            m[(r, k)] = *v;
        }
    }
    m
}

/// Vacuum direction `e1 = (1, 0, p, 0) / p0`.
pub fn e1(p: &Vector3<f64>) -> SVector<f64, 10> {
    let p0 = (1.0 + p.norm_squared()).sqrt();
    let mut v = SVector::<f64, 10>::zeros();
    v[0] = 1.0 / p0;
    v[4] = p.x / p0;
    v[5] = p.y / p0;
    v[6] = p.z / p0;
    v
}

/// The 10x9 embedding of `w9 = (v1, v2, v3)` orthogonal to `e1`.
pub fn transfer(p: &Vector3<f64>) -> SMatrix<f64, 10, 9> {
    let mut t = SMatrix::<f64, 10, 9>::zeros();
    for j in 0..3 {
        t[(0, j)] = -p[j];
        t[(4 + j, j)] = 1.0;
        t[(1 + j, 3 + j)] = 1.0;
        t[(7 + j, 6 + j)] = 1.0;
    }
    t
}

/// `W = 2 (f_W -+ 1) e1 + T w9` at kinetic momentum `p`.
pub fn reconstruct(s: &DhwState, p: &Vector3<f64>, variant: Variant) -> RawDhwVector {
    let shift = match variant {
        Variant::Feynman => s[0] - 1.0,
        Variant::AntiFeynman => s[0] + 1.0,
    };
    let w9 = SVector::<f64, 9>::from_column_slice(&s[1..]);
    let w = e1(p) * (2.0 * shift) + transfer(p) * w9;
    let mut out = [0.0; 10];
    out.copy_from_slice(w.as_slice());
    out
}

/// Largest `|W_raw - W_reconstructed|` at the sample times.
///
/// Both forms start from the vacuum at `t_i` and are advanced segment by
/// segment between consecutive sample times.
pub fn raw_vs_reduced(
    q: &Vector3<f64>,
    variant: Variant,
    pulse: &PulseConfig,
    times: &[f64],
    spec: &IntegratorSpec,
) -> Result<f64, DhwError> {
    let spec = step_cap(q, pulse, spec);
    let t0 = times[0];
    let a0 = pulse.potential(t0);
    let mut reduced: DhwState = [0.0; 10];
    let mut raw = reconstruct(&reduced, &kinetic_momentum(q, &a0), variant);
    let mut worst = 0.0_f64;
    for pair in times.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        reduced = odeint::integrate(
            |t, s: &DhwState| {
                let (a, e) = pulse.potential_and_field(t);
                let pk = kinetic_momentum(q, &a);
                let p0 = (1.0 + pk.norm_squared()).sqrt();
                dhw_rhs(s, &pk, p0, &e, variant)
            },
            reduced,
            ta,
            tb,
            &spec,
        )?
        .y;
        raw = odeint::integrate(
            |t, w: &RawDhwVector| dhw_raw_rhs(w, &kinetic_momentum(q, &pulse.potential(t))),
            raw,
            ta,
            tb,
            &spec,
        )?
        .y;
        let rebuilt = reconstruct(&reduced, &kinetic_momentum(q, &pulse.potential(tb)), variant);
        let dev = raw.iter().zip(&rebuilt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(dev);
    }
    Ok(worst)
}
