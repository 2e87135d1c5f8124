//! Two-level solver for linearly polarized pulses.
//!
//! For a field along `n` the pair problem at fixed canonical momentum reduces
//! to a spin-1/2-like precession:
//!
//! ```text
//! i d/dt (c+, c-) = [[w, i W], [-i W, -w]] (c+, c-)
//! w = sqrt(p_perp^2 + (p_par - e A)^2 + 1),   W = eps_perp e E / (2 w^2)
//! ```
//!
//! with `eps_perp = sqrt(p_perp^2 + 1)`.

use nalgebra::Vector3;
use num_complex::Complex64;
use thiserror::Error;

use crate::odeint::{self, IntegratorSpec, OdeError};
use crate::pulse::{PulseConfig, TimeWindow};

type C = Complex64;

/// `(c+, c-)`.
pub type SpinorialState = [C; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinorialError {
    #[error("the two-level reduction needs a linearly polarized pulse (delta = {delta})")]
    UnsupportedPolarization { delta: f64 },
    #[error(transparent)]
    Integrator(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Electron,
    Positron,
}

/// Right-hand side for momentum `p`, polarization axis `n` and the scalar
/// projections `a_t = A.n`, `e_t = E.n`.
pub fn spinorial_rhs(c: &SpinorialState, p: &Vector3<f64>, n: &Vector3<f64>, a_t: f64, e_t: f64) -> SpinorialState {
    let p_par = p.dot(n);
    let p_perp2 = (p - n * p_par).norm_squared();
    let kin = p_par + a_t;
    let w2 = p_perp2 + kin * kin + 1.0;
    let w = w2.sqrt();
    let eps_perp = (p_perp2 + 1.0).sqrt();
    let big = -eps_perp * e_t / (2.0 * w2);
    let i = C::new(0.0, 1.0);
    [-i * w * c[0] + big * c[1], -big * c[0] + i * w * c[1]]
}

/// Distribution from the two-level system: `2|c+(t_f)|^2` for electrons at
/// `p`, `2|c-(t_f)|^2` from the opposite start for positrons at `p` (solved at
/// `-p`).
pub fn spinorial_distribution(
    p: &Vector3<f64>,
    species: Species,
    pulse: &PulseConfig,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<f64, SpinorialError> {
    if !pulse.is_linear() {
        return Err(SpinorialError::UnsupportedPolarization { delta: pulse.delta });
    }
    let n = pulse.eps1;
    let (q, c0, read) = match species {
        Species::Electron => (*p, [C::new(0.0, 0.0), C::new(1.0, 0.0)], 0),
        Species::Positron => (-p, [C::new(1.0, 0.0), C::new(0.0, 0.0)], 1),
    };
    let reach = q.norm() + pulse.e0.abs() * pulse.tau0;
    let spec = spec.resolving(2.0 * (reach * reach + 1.0).sqrt());
    let sol = odeint::integrate(
        |t, c: &SpinorialState| {
            let (a, e) = pulse.potential_and_field(t);
            spinorial_rhs(c, &q, &n, a.dot(&n), e.dot(&n))
        },
        c0,
        window.t_i,
        window.t_f,
        &spec,
    )?;
    Ok(2.0 * sol.y[read].norm_sqr())
}
