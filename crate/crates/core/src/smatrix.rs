//! Conditional pair amplitudes from the Dirac equation with Feynman and
//! anti-Feynman boundary conditions.
//!
//! A mode with electron canonical momentum `q` is expanded in the free
//! bispinors `u+_{q,lambda}` and `u-_{-q,lambda}`. In the interaction picture
//! the four coefficients obey `dc/dt = -i V(t) c`. The boundary conditions
//! fix half the coefficients at `t_i` and half at `t_f`; since the system is
//! linear, two forward integrations and a 2x2 solve give the exact answer.

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::bispinor::{BispinorBasis, ModeBispinors};
use crate::odeint::{self, IntegratorSpec, OdeError};
use crate::pulse::{PulseConfig, TimeWindow};

type C = Complex64;

/// Coefficients ordered `[(+,+), (+,-), (-,+), (-,-)]` in `(beta, lambda)`.
pub type CoefficientState = [C; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmatrixError {
    #[error("shooting matrix is singular (|det M| = {0:e})")]
    SingularShooting(f64),
    #[error(transparent)]
    Integrator(#[from] OdeError),
}

/// Which asymptotic conditions are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Positron state fixed in the future, no electron in the past; yields
    /// electron distributions.
    Feynman,
    /// Electron state fixed in the future, no positron in the past; yields
    /// positron distributions.
    AntiFeynman,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Feynman => "feynman",
            Variant::AntiFeynman => "antifeynman",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "feynman" | "f" => Ok(Variant::Feynman),
            "antifeynman" | "af" => Ok(Variant::AntiFeynman),
            _ => Err(format!("unknown variant {s:?}; expected \"feynman\" or \"antifeynman\"")),
        }
    }
}

/// Spin or helicity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Plus, Spin::Minus];

    pub fn index(self) -> usize {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    pub fn sign(self) -> char {
        match self {
            Spin::Plus => '+',
            Spin::Minus => '-',
        }
    }
}

/// `dc/dt = -i V(t) c`.
pub fn coefficient_rhs(mode: &ModeBispinors, pulse: &PulseConfig, t: f64, c: &CoefficientState) -> CoefficientState {
    let v = mode.interaction_matrix(&pulse.potential(t), t);
    let mut out = [C::new(0.0, 0.0); 4];
    for r in 0..4 {
        let mut acc = C::new(0.0, 0.0);
        for k in 0..4 {
            acc += v[(r, k)] * c[k];
        }
        out[r] = C::new(acc.im, -acc.re);
    }
    out
}

/// Final-time images of the two basis trajectories.
///
/// Column `mu` of `m` holds the coefficients of the conditioned sector and
/// column `mu` of `p` those of the produced sector, for the trajectory that
/// starts as the unit vector `e_mu` in the seeded sector.
#[derive(Debug, Clone, Copy)]
pub struct Shooting {
    pub m: Matrix2<C>,
    pub p: Matrix2<C>,
    /// Largest `| |c(t)| - 1 |` seen at any accepted step.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Integrates the two basis trajectories for `variant`.
pub fn shoot(
    mode: &ModeBispinors,
    variant: Variant,
    pulse: &PulseConfig,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<Shooting, SmatrixError> {
    // Feynman seeds the negative-energy sector (indices 2, 3) and reads the
    // positive-energy sector as the produced one; anti-Feynman swaps them.
    let (seed, prod) = match variant {
        Variant::Feynman => (2, 0),
        Variant::AntiFeynman => (0, 2),
    };
    let spec = spec.resolving(2.0 * mode.p0);
    // Both basis trajectories advance as one 8-component system so they
    // share every field evaluation.
    let mut c0 = [C::new(0.0, 0.0); 8];
    c0[seed] = C::new(1.0, 0.0);
    c0[4 + seed + 1] = C::new(1.0, 0.0);
    let mut drift = 0.0_f64;
    let sol = odeint::integrate_observed(
        |t, c: &[C; 8]| {
            let v = mode.interaction_matrix(&pulse.potential(t), t);
            let mut out = [C::new(0.0, 0.0); 8];
            for blk in 0..2 {
                for r in 0..4 {
                    let mut acc = C::new(0.0, 0.0);
                    for k in 0..4 {
                        acc += v[(r, k)] * c[4 * blk + k];
                    }
                    out[4 * blk + r] = C::new(acc.im, -acc.re);
                }
            }
            out
        },
        c0,
        window.t_i,
        window.t_f,
        &spec,
        |_, c| {
            for blk in 0..2 {
                let n = c[4 * blk..4 * blk + 4].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                drift = drift.max((n - 1.0).abs());
            }
        },
    )?;
    let mut m = Matrix2::zeros();
    let mut p = Matrix2::zeros();
    for mu in 0..2 {
        for lam in 0..2 {
            m[(lam, mu)] = sol.y[4 * mu + seed + lam];
            p[(lam, mu)] = sol.y[4 * mu + prod + lam];
        }
    }
    let steps = sol.accepted;
    Ok(Shooting { m, p, norm_drift: drift, steps })
}

/// One conditioning row of the amplitude table.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalRow {
    pub cond: Spin,
    /// Norm of the initial state, `|alpha|`.
    pub n_tilde: f64,
    /// Unnormalized produced coefficients at `t_f`, indexed by the outgoing spin.
    pub c_out: [C; 2],
    /// Renormalized amplitudes, indexed by the outgoing spin.
    pub amplitude: [C; 2],
}

impl Shooting {
    /// Solves `M alpha = e_cond` and forms the renormalized amplitudes.
    pub fn condition(&self, variant: Variant, cond: Spin) -> Result<ConditionalRow, SmatrixError> {
        let det = self.m.determinant();
        if det.norm() < 1e-12 {
            return Err(SmatrixError::SingularShooting(det.norm()));
        }
        let rhs = if cond == Spin::Plus { Vector2::new(C::from(1.0), C::from(0.0)) } else { Vector2::new(C::from(0.0), C::from(1.0)) };
        let inv = Matrix2::new(self.m[(1, 1)], -self.m[(0, 1)], -self.m[(1, 0)], self.m[(0, 0)]) / det;
        let alpha = inv * rhs;
        let n_tilde = alpha.norm();
        let out = self.p * alpha;
        let sign = match variant {
            Variant::Feynman => 1.0,
            Variant::AntiFeynman => -1.0,
        };
        Ok(ConditionalRow {
            cond,
            n_tilde,
            c_out: [out[0], out[1]],
            amplitude: [out[0] * (sign / n_tilde), out[1] * (sign / n_tilde)],
        })
    }
}

/// Full 2x2 amplitude table for one momentum.
///
/// For Feynman conditions `momentum` is the electron momentum, the rows are
/// the positron spin and the columns the electron spin. For anti-Feynman
/// conditions `momentum` is the positron momentum, the rows are the electron
/// spin and the columns the positron spin.
#[derive(Debug, Clone, Copy)]
pub struct PairAmplitudes {
    pub momentum: Vector3<f64>,
    pub variant: Variant,
    pub basis: BispinorBasis,
    pub amplitude: [[C; 2]; 2],
    pub n_tilde: [f64; 2],
    pub f: [[f64; 2]; 2],
    /// Largest deviation of `N^2` from `1 + sum |C_out|^2` over both rows.
    pub normalization_defect: f64,
    pub norm_drift: f64,
}

impl PairAmplitudes {
    pub fn f_total(&self) -> f64 {
        self.f.iter().flatten().sum()
    }
}

/// Electron momentum of the mode that carries the distribution at `p`.
pub fn mode_momentum(variant: Variant, p: &Vector3<f64>) -> Vector3<f64> {
    match variant {
        Variant::Feynman => *p,
        Variant::AntiFeynman => -p,
    }
}

/// One conditioning row.
pub fn solve_boundary_value(
    p: &Vector3<f64>,
    cond: Spin,
    variant: Variant,
    pulse: &PulseConfig,
    basis: BispinorBasis,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<ConditionalRow, SmatrixError> {
    let mode = ModeBispinors::new(basis, mode_momentum(variant, p));
    shoot(&mode, variant, pulse, window, spec)?.condition(variant, cond)
}

/// Both conditioning rows from one pair of basis trajectories.
pub fn pair_distributions(
    p: &Vector3<f64>,
    variant: Variant,
    pulse: &PulseConfig,
    basis: BispinorBasis,
    window: TimeWindow,
    spec: &IntegratorSpec,
) -> Result<PairAmplitudes, SmatrixError> {
    let mode = ModeBispinors::new(basis, mode_momentum(variant, p));
    let shot = shoot(&mode, variant, pulse, window, spec)?;
    let mut amplitude = [[C::new(0.0, 0.0); 2]; 2];
    let mut f = [[0.0; 2]; 2];
    let mut n_tilde = [0.0; 2];
    let mut defect = 0.0_f64;
    for cond in Spin::BOTH {
        let row = shot.condition(variant, cond)?;
        let i = cond.index();
        n_tilde[i] = row.n_tilde;
        let out_norm: f64 = row.c_out.iter().map(|z| z.norm_sqr()).sum();
        defect = defect.max((row.n_tilde * row.n_tilde - 1.0 - out_norm).abs());
        for j in 0..2 {
            amplitude[i][j] = row.amplitude[j];
            f[i][j] = row.amplitude[j].norm_sqr();
        }
    }
    Ok(PairAmplitudes {
        momentum: *p,
        variant,
        basis,
        amplitude,
        n_tilde,
        f,
        normalization_defect: defect,
        norm_drift: shot.norm_drift,
    })
}
