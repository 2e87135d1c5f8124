//! Adaptive Dormand-Prince 8(5,3) integration of small dense ODE systems.
//!
//! The state is any fixed-size array of real or complex numbers. Step-size
//! control follows Hairer's DOP853: a fifth-order error estimate corrected by
//! a third-order one, measured in the RMS norm with per-component scale
//! `abs_tol + rel_tol * max(|y|, |y_new|)`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size {h:e} fell below the minimum {min_step:e} at t = {t}")]
    StepUnderflow { t: f64, h: f64, min_step: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid integrator setting {name} = {value}")]
    InvalidSpec { name: &'static str, value: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

/// Tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.05, min_step: 1e-12, max_steps: 50_000_000 }
    }
}

impl IntegratorSpec {
    pub fn validate(&self) -> Result<(), OdeError> {
        let check = |name, value: f64, ok: bool| if ok { Ok(()) } else { Err(OdeError::InvalidSpec { name, value }) };
        check("rel_tol", self.rel_tol, self.rel_tol >= 0.0 && self.rel_tol.is_finite())?;
        check("abs_tol", self.abs_tol, self.abs_tol >= 0.0 && self.abs_tol.is_finite())?;
        check("tolerance", 0.0, self.rel_tol > 0.0 || self.abs_tol > 0.0)?;
        check("max_step", self.max_step, self.max_step > 0.0)?;
        check("min_step", self.min_step, self.min_step >= 0.0 && self.min_step < self.max_step)?;
        Ok(())
    }

    /// Caps the step at a tenth of the period of an oscillation at `omega`.
    pub fn resolving(mut self, omega: f64) -> Self {
        if omega > 0.0 {
            self.max_step = self.max_step.min(0.1 * std::f64::consts::TAU / omega);
        }
        self
    }
}

/// State vectors the integrator can advance.
pub trait OdeState: Copy {
    fn zero() -> Self;
    /// `self += a * x`.
    fn axpy(&mut self, a: f64, x: &Self);
    fn all_finite(&self) -> bool;
    /// Number of scalar components entering the error norm.
    fn len(&self) -> usize;
    /// Sum over components of `(e_i / (atol + rtol * max(|y_i|, |z_i|)))^2`.
    fn weighted_sq(e: &Self, y: &Self, z: &Self, atol: f64, rtol: f64) -> f64;
}

impl<const N: usize> OdeState for [f64; N] {
    fn zero() -> Self {
        [0.0; N]
    }

    #[inline]
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn len(&self) -> usize {
        N
    }

    fn weighted_sq(e: &Self, y: &Self, z: &Self, atol: f64, rtol: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sk = atol + rtol * y[i].abs().max(z[i].abs());
            let r = e[i] / sk;
            s += r * r;
        }
        s
    }
}

impl<const N: usize> OdeState for [Complex64; N] {
    fn zero() -> Self {
        [Complex64::new(0.0, 0.0); N]
    }

    #[inline]
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += v * a;
        }
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn len(&self) -> usize {
        N
    }

    fn weighted_sq(e: &Self, y: &Self, z: &Self, atol: f64, rtol: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sk = atol + rtol * y[i].norm().max(z[i].norm());
            s += e[i].norm_sqr() / (sk * sk);
        }
        s
    }
}

/// Final state and step statistics.
#[derive(Debug, Clone, Copy)]
pub struct Solution<S> {
    pub y: S,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

// Stage couplings as (stage index, coefficient); zero entries omitted.
const A: [&[(usize, f64)]; 12] = [
    &[],
    &[(0, 5.26001519587677318785587544488E-2)],
    &[(0, 1.97250569845378994544595329183E-2), (1, 5.91751709536136983633785987549E-2)],
    &[(0, 2.95875854768068491816892993775E-2), (2, 8.87627564304205475450678981324E-2)],
    &[
        (0, 2.41365134159266685502369798665E-1),
        (2, -8.84549479328286085344864962717E-1),
        (3, 9.24834003261792003115737966543E-1),
    ],
    &[
        (0, 3.7037037037037037037037037037E-2),
        (3, 1.70828608729473871279604482173E-1),
        (4, 1.25467687566822425016691814123E-1),
    ],
    &[
        (0, 3.7109375E-2),
        (3, 1.70252211019544039314978060272E-1),
        (4, 6.02165389804559606850219397283E-2),
        (5, -1.7578125E-2),
    ],
    &[
        (0, 3.70920001185047927108779319836E-2),
        (3, 1.70383925712239993810214054705E-1),
        (4, 1.07262030446373284651809199168E-1),
        (5, -1.53194377486244017527936158236E-2),
        (6, 8.27378916381402288758473766002E-3),
    ],
    &[
        (0, 6.24110958716075717114429577812E-1),
        (3, -3.36089262944694129406857109825E0),
        (4, -8.68219346841726006818189891453E-1),
        (5, 2.75920996994467083049415600797E1),
        (6, 2.01540675504778934086186788979E1),
        (7, -4.34898841810699588477366255144E1),
    ],
    &[
        (0, 4.77662536438264365890433908527E-1),
        (3, -2.48811461997166764192642586468E0),
        (4, -5.90290826836842996371446475743E-1),
        (5, 2.12300514481811942347288949897E1),
        (6, 1.52792336328824235832596922938E1),
        (7, -3.32882109689848629194453265587E1),
        (8, -2.03312017085086261358222928593E-2),
    ],
    &[
        (0, -9.3714243008598732571704021658E-1),
        (3, 5.18637242884406370830023853209E0),
        (4, 1.09143734899672957818500254654E0),
        (5, -8.14978701074692612513997267357E0),
        (6, -1.85200656599969598641566180701E1),
        (7, 2.27394870993505042818970056734E1),
        (8, 2.49360555267965238987089396762E0),
        (9, -3.0467644718982195003823669022E0),
    ],
    &[
        (0, 2.27331014751653820792359768449E0),
        (3, -1.05344954667372501984066689879E1),
        (4, -2.00087205822486249909675718444E0),
        (5, -1.79589318631187989172765950534E1),
        (6, 2.79488845294199600508499808837E1),
        (7, -2.85899827713502369474065508674E0),
        (8, -8.87285693353062954433549289258E0),
        (9, 1.23605671757943030647266201528E1),
        (10, 6.43392746015763530355970484046E-1),
    ],
];

const B: [(usize, f64); 8] = [
    (0, 5.42937341165687622380535766363E-2),
    (5, 4.45031289275240888144113950566E0),
    (6, 1.89151789931450038304281599044E0),
    (7, -5.8012039600105847814672114227E0),
    (8, 3.1116436695781989440891606237E-1),
    (9, -1.52160949662516078556178806805E-1),
    (10, 2.01365400804030348374776537501E-1),
    (11, 4.47106157277725905176885569043E-2),
];

const ER: [(usize, f64); 8] = [
    (0, 0.1312004499419488073250102996E-01),
    (5, -0.1225156446376204440720569753E+01),
    (6, -0.4957589496572501915214079952E+00),
    (7, 0.1664377182454986536961530415E+01),
    (8, -0.3503288487499736816886487290E+00),
    (9, 0.3341791187130174790297318841E+00),
    (10, 0.8192320648511571246570742613E-01),
    (11, -0.2235530786388629525884427845E-01),
];

const BHH: [(usize, f64); 3] = [
    (0, 0.244094488188976377952755905512E+00),
    (8, 0.733846688281611857341361741547E+00),
    (11, 0.220588235294117647058823529412E-01),
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const BETA: f64 = 0.0;

/// Integrates `dy/dt = rhs(t, y)` from `t_i` to `t_f` (either direction).
pub fn integrate<S, F>(rhs: F, y0: S, t_i: f64, t_f: f64, spec: &IntegratorSpec) -> Result<Solution<S>, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    integrate_observed(rhs, y0, t_i, t_f, spec, |_, _| {})
}

/// Like [`integrate`], calling `observe(t, y)` after every accepted step.
pub fn integrate_observed<S, F, O>(
    mut rhs: F,
    y0: S,
    t_i: f64,
    t_f: f64,
    spec: &IntegratorSpec,
    mut observe: O,
) -> Result<Solution<S>, OdeError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    O: FnMut(f64, &S),
{
    spec.validate()?;
    if !y0.all_finite() {
        return Err(OdeError::NonFiniteState { t: t_i });
    }
    let mut sol = Solution { y: y0, accepted: 0, rejected: 0, evaluations: 0 };
    if t_f == t_i {
        return Ok(sol);
    }
    let dir = (t_f - t_i).signum();
    let n = y0.len() as f64;

    let mut t = t_i;
    let mut y = y0;
    let mut k = [S::zero(); 12];
    k[0] = rhs(t, &y);
    sol.evaluations += 1;

    let mut h = initial_step(&mut rhs, t, &y, &k[0], dir, spec, &mut sol.evaluations);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        let remaining = (t_f - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut final_step = false;
        if h.abs() >= remaining {
            h = remaining * dir;
            final_step = true;
        } else if h.abs() < spec.min_step {
            return Err(OdeError::StepUnderflow { t, h: h.abs(), min_step: spec.min_step });
        }
        if sol.accepted + sol.rejected >= spec.max_steps {
            return Err(OdeError::TooManySteps(spec.max_steps));
        }

        for s in 1..12 {
            let mut ys = y;
            for &(j, a) in A[s] {
                ys.axpy(h * a, &k[j]);
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        sol.evaluations += 11;

        let mut incr = S::zero();
        for &(j, b) in &B {
            incr.axpy(b, &k[j]);
        }
        let mut y_new = y;
        y_new.axpy(h, &incr);
        if !y_new.all_finite() {
            return Err(OdeError::NonFiniteState { t: t + h });
        }

        let mut e5 = S::zero();
        for &(j, c) in &ER {
            e5.axpy(c, &k[j]);
        }
        let mut e3 = incr;
        for &(j, c) in &BHH {
            e3.axpy(-c, &k[j]);
        }
        let err5 = S::weighted_sq(&e5, &y, &y_new, spec.abs_tol, spec.rel_tol);
        let err3 = S::weighted_sq(&e3, &y, &y_new, spec.abs_tol, spec.rel_tol);
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * (1.0 / (n * deno)).sqrt();

        let fac11 = err.powf(0.125 - 0.2 * BETA);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let h_new = h / fac;

        if err <= 1.0 {
            fac_old = err.max(1e-4);
            sol.accepted += 1;
            t = if final_step { t_f } else { t + h };
            y = y_new;
            k[0] = rhs(t, &y);
            sol.evaluations += 1;
            observe(t, &y);
            if final_step {
                break;
            }
            h = if last_rejected { dir * h_new.abs().min(h.abs()) } else { h_new };
            h = dir * h.abs().min(spec.max_step);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
    sol.y = y;
    Ok(sol)
}

fn initial_step<S, F>(rhs: &mut F, t: f64, y: &S, f0: &S, dir: f64, spec: &IntegratorSpec, evals: &mut usize) -> f64
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let n = y.len() as f64;
    let dnf = S::weighted_sq(f0, y, y, spec.abs_tol, spec.rel_tol) / n;
    let dny = S::weighted_sq(y, y, y, spec.abs_tol, spec.rel_tol) / n;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(spec.max_step);

    let mut y1 = *y;
    y1.axpy(dir * h, f0);
    let f1 = rhs(t + dir * h, &y1);
    *evals += 1;
    let mut df = f1;
    df.axpy(-1.0, f0);
    let der2 = (S::weighted_sq(&df, y, y, spec.abs_tol, spec.rel_tol) / n).sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    dir * (100.0 * h).min(h1).min(spec.max_step).max(spec.min_step)
}
