//! Homogeneous electric-field pulses built from a vector potential.
//!
//! Every pulse is defined through `A(t)` and its field is `E(t) = -dA/dt`,
//! so the time integral of `E` over the whole real line is exactly zero.
//! The common envelope is
//!
//! ```text
//! F(t) = tau0 / cosh(t / tau(t)),   tau(t) = tau0 * (1 + sigma * tanh(t / t0))
//! ```
//!
//! and `sigma` skews the pulse: for `sigma > 0` it rises quickly and decays
//! slowly.

use nalgebra::Vector3;
use thiserror::Error;

use crate::quad;

/// Default relative threshold for [`PulseConfig::integration_window`].
pub const DEFAULT_EPS_A: f64 = 1e-16;

/// Shape family of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseKind {
    /// `A = E0 F(t) eps1`.
    SauterLike,
    /// `A = E0 F(t) cos(omega t + chi) eps1`.
    Oscillating,
    /// `A = E0 F(t) [cos(omega t + chi) cos(delta) eps1 + sin(omega t + chi) sin(delta) eps2]`.
    Elliptic,
}

impl PulseKind {
    pub fn name(self) -> &'static str {
        match self {
            PulseKind::SauterLike => "sauter",
            PulseKind::Oscillating => "oscillating",
            PulseKind::Elliptic => "elliptic",
        }
    }
}

impl std::str::FromStr for PulseKind {
    type Err = PulseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sauter" | "sauterlike" | "sauter_like" | "sauter-like" => Ok(PulseKind::SauterLike),
            "oscillating" => Ok(PulseKind::Oscillating),
            "elliptic" => Ok(PulseKind::Elliptic),
            _ => Err(PulseError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("invalid pulse parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("polarization vectors are not orthonormal (|eps1| = {n1}, |eps2| = {n2}, eps1.eps2 = {dot})")]
    NonOrthonormalFrame { n1: f64, n2: f64, dot: f64 },
    #[error("unknown pulse kind {0:?}")]
    UnknownKind(String),
    #[error("window threshold eps_A = {0} must lie in (0, 1)")]
    DegenerateThreshold(f64),
}

/// Full description of one pulse, in relativistic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    pub kind: PulseKind,
    /// Field strength in units of the critical field.
    pub e0: f64,
    pub tau0: f64,
    pub t0: f64,
    pub sigma: f64,
    pub omega: f64,
    pub chi: f64,
    pub delta: f64,
    pub eps1: Vector3<f64>,
    pub eps2: Vector3<f64>,
}

/// Finite integration interval `[t_i, t_f]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t_i: f64,
    pub t_f: f64,
}

impl TimeWindow {
    pub fn new(t_i: f64, t_f: f64) -> Self {
        TimeWindow { t_i, t_f }
    }

    pub fn duration(&self) -> f64 {
        self.t_f - self.t_i
    }
}

#[inline]
fn sech(x: f64) -> f64 {
    let a = (-x.abs()).exp();
    2.0 * a / (1.0 + a * a)
}

impl PulseConfig {
    /// Linearly polarized pulse along `e_x` without a carrier, `t0 = tau0`.
    pub fn sauter_like(e0: f64, tau0: f64, sigma: f64) -> Self {
        PulseConfig {
            kind: PulseKind::SauterLike,
            e0,
            tau0,
            t0: tau0,
            sigma,
            omega: 0.0,
            chi: 0.0,
            delta: 0.0,
            eps1: Vector3::x(),
            eps2: Vector3::y(),
        }
    }

    /// Linearly polarized carrier pulse along `e_x`, `t0 = tau0`.
    pub fn oscillating(e0: f64, tau0: f64, sigma: f64, omega: f64, chi: f64) -> Self {
        PulseConfig { kind: PulseKind::Oscillating, omega, chi, ..Self::sauter_like(e0, tau0, sigma) }
    }

    /// Elliptically polarized carrier pulse in the `(e_x, e_y)` plane, `t0 = tau0`.
    pub fn elliptic(e0: f64, tau0: f64, sigma: f64, omega: f64, chi: f64, delta: f64) -> Self {
        PulseConfig { kind: PulseKind::Elliptic, omega, chi, delta, ..Self::sauter_like(e0, tau0, sigma) }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_frame(mut self, eps1: Vector3<f64>, eps2: Vector3<f64>) -> Self {
        self.eps1 = eps1;
        self.eps2 = eps2;
        self
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        let bad = |name, value, reason| Err(PulseError::InvalidParameter { name, value, reason });
        if !self.e0.is_finite() {
            return bad("E0", self.e0, "must be finite");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad("tau0", self.tau0, "must be positive");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0", self.t0, "must be positive");
        }
        if !(self.sigma > -1.0 && self.sigma < 1.0) {
            return bad("sigma", self.sigma, "must lie in (-1, 1)");
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return bad("omega", self.omega, "must be non-negative");
        }
        if !self.chi.is_finite() {
            return bad("chi", self.chi, "must be finite");
        }
        if !self.delta.is_finite() {
            return bad("delta", self.delta, "must be finite");
        }
        let n1 = self.eps1.norm();
        let n2 = self.eps2.norm();
        let dot = self.eps1.dot(&self.eps2);
        if (n1 - 1.0).abs() > 1e-12 || (n2 - 1.0).abs() > 1e-12 || dot.abs() > 1e-12 {
            return Err(PulseError::NonOrthonormalFrame { n1, n2, dot });
        }
        Ok(())
    }

    /// True when `A(t)` stays parallel to `eps1` for all `t`.
    pub fn is_linear(&self) -> bool {
        match self.kind {
            PulseKind::SauterLike | PulseKind::Oscillating => true,
            PulseKind::Elliptic => self.delta == 0.0,
        }
    }

    fn tau(&self, t: f64) -> f64 {
        self.tau0 * (1.0 + self.sigma * (t / self.t0).tanh())
    }

    /// `F(t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.tau0 * sech(t / self.tau(t))
    }

    /// `F(t)` and `F'(t)`, including the `tau'(t)` chain-rule term.
    pub fn envelope_and_derivative(&self, t: f64) -> (f64, f64) {
        let (f, _, fp) = self.envelope_parts(t);
        (f, fp)
    }

    // Returns (F, du/dt, F') with u = t / tau(t).
    fn envelope_parts(&self, t: f64) -> (f64, f64, f64) {
        let s = t / self.t0;
        let tau = self.tau0 * (1.0 + self.sigma * s.tanh());
        let sech_s = sech(s);
        let dtau = self.tau0 * self.sigma * sech_s * sech_s / self.t0;
        let u = t / tau;
        let du = (tau - t * dtau) / (tau * tau);
        let f = self.tau0 * sech(u);
        let fp = -f * u.tanh() * du;
        (f, du, fp)
    }

    /// Vector potential `A(t)`.
    pub fn potential(&self, t: f64) -> Vector3<f64> {
        self.potential_and_field(t).0
    }

    /// Electric field `E(t) = -dA/dt`, evaluated in closed form.
    pub fn field(&self, t: f64) -> Vector3<f64> {
        self.potential_and_field(t).1
    }

    /// `(A(t), E(t))` sharing one envelope evaluation.
    pub fn potential_and_field(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (f, _, fp) = self.envelope_parts(t);
        let e0 = self.e0;
        match self.kind {
            PulseKind::SauterLike => (self.eps1 * (e0 * f), self.eps1 * (-e0 * fp)),
            PulseKind::Oscillating => {
                let (sn, cs) = (self.omega * t + self.chi).sin_cos();
                let a = e0 * f * cs;
                let e = -e0 * (fp * cs - f * self.omega * sn);
                (self.eps1 * a, self.eps1 * e)
            }
            PulseKind::Elliptic => {
                let (sn, cs) = (self.omega * t + self.chi).sin_cos();
                let (sd, cd) = self.delta.sin_cos();
                let a1 = e0 * f * cs * cd;
                let a2 = e0 * f * sn * sd;
                let e1 = -e0 * (fp * cs - f * self.omega * sn) * cd;
                let e2 = -e0 * (fp * sn + f * self.omega * cs) * sd;
                (self.eps1 * a1 + self.eps2 * a2, self.eps1 * e1 + self.eps2 * e2)
            }
        }
    }

    /// Shortest time scale of the pulse, used to size sampling steps.
    pub fn time_scale(&self) -> f64 {
        let mut s = self.tau0 * (1.0 - self.sigma.abs()).min(self.t0 / self.tau0);
        if self.kind != PulseKind::SauterLike && self.omega > 0.0 {
            s = s.min(1.0 / self.omega);
        }
        s
    }

    /// `integral E dt` over `[t_i, t_f]` by adaptive Gauss-Kronrod quadrature.
    pub fn net_impulse(&self, t_i: f64, t_f: f64) -> Vector3<f64> {
        let panels = (((t_f - t_i) / self.time_scale()).ceil() as usize).clamp(1, 1 << 16);
        let r = quad::integrate(
            |t| {
                let e = self.field(t);
                [e.x, e.y, e.z]
            },
            t_i,
            t_f,
            panels,
            1e-15 * self.e0.abs().max(1e-300) * self.tau0,
            1e-14,
        );
        Vector3::new(r[0], r[1], r[2])
    }

    /// Time window outside which `|A|` and `|E|` both stay below `eps_a`
    /// times their maxima.
    ///
    /// `|A| <= |E0| F` and `|E| <= |E0| F (max|u'| + omega)` with
    /// `u = t / tau(t)`, and `F` is monotone on each side of the origin, so
    /// each edge is the root of one monotone equation `F(t) = level`. The
    /// edges are located by bracketing and bisection.
    pub fn integration_window(&self, eps_a: f64) -> Result<TimeWindow, PulseError> {
        if !(eps_a > 0.0 && eps_a < 1.0) {
            return Err(PulseError::DegenerateThreshold(eps_a));
        }
        self.validate()?;
        let unit = PulseConfig { e0: 1.0, ..*self };
        let (max_a, max_e, max_du) = unit.sampled_maxima();
        let carrier = if self.kind == PulseKind::SauterLike { 0.0 } else { self.omega };
        let mut ratio = 1.0 / max_a;
        if max_e > 0.0 {
            ratio = ratio.max((max_du + carrier) / max_e);
        }
        let level = eps_a / ratio;
        let t_f = self.envelope_edge(level, 1.0);
        let t_i = -self.envelope_edge(level, -1.0);
        Ok(TimeWindow { t_i, t_f })
    }

    // Returns (max |A|, max |E|, max |u'|) for E0 = 1 on a dense grid.
    fn sampled_maxima(&self) -> (f64, f64, f64) {
        let reach = 40.0 * self.tau0 * (1.0 + self.sigma.abs()) + 4.0 * self.t0;
        let h = self.time_scale() / 64.0;
        let n = (2.0 * reach / h).ceil() as usize;
        let mut max_a = 0.0_f64;
        let mut max_e = 0.0_f64;
        let mut max_du = 0.0_f64;
        for k in 0..=n {
            let t = -reach + h * k as f64;
            let (a, e) = self.potential_and_field(t);
            let (_, du, _) = self.envelope_parts(t);
            max_a = max_a.max(a.norm());
            max_e = max_e.max(e.norm());
            max_du = max_du.max(du.abs());
        }
        // tau(t) saturates beyond the sampled range, so include the limits.
        let lim = 1.0 / (self.tau0 * (1.0 - self.sigma.abs()));
        (max_a, max_e, max_du.max(lim) * 1.01)
    }

    // Distance from the origin, along `dir`, where F falls to `level`.
    fn envelope_edge(&self, level: f64, dir: f64) -> f64 {
        if level >= self.tau0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = self.tau0;
        while self.envelope(dir * hi) > level {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.envelope(dir * mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
