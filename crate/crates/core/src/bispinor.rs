//! Dirac matrices, free bispinors and the interaction-picture coupling.
//!
//! Dirac representation, metric `(+,-,-,-)`, `alpha_j = gamma^0 gamma^j`.
//! Mode coefficients are ordered `(beta, lambda)` as
//! `[(+,+), (+,-), (-,+), (-,-)]`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3, Vector4};
use num_complex::Complex64;
use thiserror::Error;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("spin axis must be a unit vector (|axis| = {0})")]
    AxisNotUnit(f64),
    #[error("cannot parse basis {0:?}; expected \"z\", \"axis:x,y,z\" or \"helicity\"")]
    Unparsable(String),
}

/// Spin quantization used for the free states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BispinorBasis {
    /// Spin projection on a fixed unit axis.
    FixedAxis(Vector3<f64>),
    /// Spin projection on the momentum direction. At zero momentum the
    /// direction `e_z` is used.
    Helicity,
}

impl BispinorBasis {
    pub fn z() -> Self {
        BispinorBasis::FixedAxis(Vector3::z())
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        match self {
            BispinorBasis::FixedAxis(n) if (n.norm() - 1.0).abs() > 1e-12 => Err(BasisError::AxisNotUnit(n.norm())),
            _ => Ok(()),
        }
    }

    /// Configuration spelling: `z`, `axis:x,y,z` or `helicity`.
    pub fn label(&self) -> String {
        match self {
            BispinorBasis::FixedAxis(n) if *n == Vector3::z() => "z".to_string(),
            BispinorBasis::FixedAxis(n) => format!("axis:{:e},{:e},{:e}", n.x, n.y, n.z),
            BispinorBasis::Helicity => "helicity".to_string(),
        }
    }
}

impl std::str::FromStr for BispinorBasis {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "z" => return Ok(BispinorBasis::z()),
            "x" => return Ok(BispinorBasis::FixedAxis(Vector3::x())),
            "y" => return Ok(BispinorBasis::FixedAxis(Vector3::y())),
            "helicity" => return Ok(BispinorBasis::Helicity),
            _ => {}
        }
        let rest = t.strip_prefix("axis:").ok_or_else(|| BasisError::Unparsable(s.to_string()))?;
        let parts: Vec<f64> = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| BasisError::Unparsable(s.to_string()))?;
        if parts.len() != 3 {
            return Err(BasisError::Unparsable(s.to_string()));
        }
        let b = BispinorBasis::FixedAxis(Vector3::new(parts[0], parts[1], parts[2]));
        b.validate()?;
        Ok(b)
    }
}

/// Pauli matrices `[sigma_x, sigma_y, sigma_z]`.
pub fn pauli() -> [Matrix2<C>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

fn sigma_dot(v: &Vector3<f64>) -> Matrix2<C> {
    let s = pauli();
    s[0] * C::from(v.x) + s[1] * C::from(v.y) + s[2] * C::from(v.z)
}

fn blocks(a: Matrix2<C>, b: Matrix2<C>, c: Matrix2<C>, d: Matrix2<C>) -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&b);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&d);
    m
}

/// `gamma^0 = diag(1, 1, -1, -1)`.
pub fn gamma0() -> Matrix4<C> {
    Matrix4::from_diagonal(&Vector4::new(ONE, ONE, -ONE, -ONE))
}

/// `[alpha_x, alpha_y, alpha_z]`, each `[[0, sigma_j], [sigma_j, 0]]`.
pub fn alpha() -> [Matrix4<C>; 3] {
    let z = Matrix2::zeros();
    pauli().map(|s| blocks(z, s, s, z))
}

/// Free Hamiltonian `alpha . q + gamma^0`.
pub fn free_hamiltonian(q: &Vector3<f64>) -> Matrix4<C> {
    let a = alpha();
    gamma0() + a[0] * C::from(q.x) + a[1] * C::from(q.y) + a[2] * C::from(q.z)
}

/// Polar and azimuthal angles of `v`; `(0, 0)` for the zero vector.
pub fn polar_angles(v: &Vector3<f64>) -> (f64, f64) {
    let r = v.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let theta = (v.z / r).clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x);
    (theta, phi)
}

fn half_angle_spinors(theta: f64, phi: f64) -> [Vector2<C>; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let em = C::from_polar(1.0, -0.5 * phi);
    let ep = C::from_polar(1.0, 0.5 * phi);
    [Vector2::new(em * c, ep * s), Vector2::new(-em * s, ep * c)]
}

/// `(chi_+, chi_-)`: eigenvectors of `sigma . n` with eigenvalues `+1, -1`,
/// where `n` is the fixed axis or the direction of `q`.
pub fn pauli_spinors(basis: &BispinorBasis, q: &Vector3<f64>) -> [Vector2<C>; 2] {
    let (theta, phi) = match basis {
        BispinorBasis::FixedAxis(n) => polar_angles(n),
        BispinorBasis::Helicity => polar_angles(q),
    };
    half_angle_spinors(theta, phi)
}

/// Free bispinors of one momentum mode and the couplings between them.
///
/// `u[k]` for `k = 0, 1` are the positive-energy states at `q` with spin
/// label `+, -`; `u[k]` for `k = 2, 3` are the negative-energy states at
/// `-q`. `coupling[j] = U^dagger alpha_j U` with `U = [u_0 u_1 u_2 u_3]`.
#[derive(Debug, Clone)]
pub struct ModeBispinors {
    pub q: Vector3<f64>,
    pub p0: f64,
    pub basis: BispinorBasis,
    pub u: [Vector4<C>; 4],
    pub coupling: [Matrix4<C>; 3],
}

impl ModeBispinors {
    pub fn new(basis: BispinorBasis, q: Vector3<f64>) -> Self {
        let p0 = (1.0 + q.norm_squared()).sqrt();
        let norm = ((p0 + 1.0) / (2.0 * p0)).sqrt();
        let sq = sigma_dot(&q) * C::from(1.0 / (p0 + 1.0));
        let chi = pauli_spinors(&basis, &q);

        let mut u = [Vector4::zeros(); 4];
        for (lam, x) in chi.iter().enumerate() {
            let small = sq * x;
            u[lam] = Vector4::new(x[0], x[1], small[0], small[1]) * C::from(norm);
            u[2 + lam] = Vector4::new(-small[0], -small[1], x[0], x[1]) * C::from(norm);
        }

        let mut umat = Matrix4::zeros();
        for (k, col) in u.iter().enumerate() {
            umat.set_column(k, col);
        }
        let ud = umat.adjoint();
        let coupling = alpha().map(|a| ud * a * umat);
        ModeBispinors { q, p0, basis, u, coupling }
    }

    /// Energy sign `beta` of coefficient index `k`.
    pub fn beta(k: usize) -> f64 {
        if k < 2 {
            1.0
        } else {
            -1.0
        }
    }

    /// `V(t)` with entries `exp(i (beta_a - beta_b) p0 t) <u_a| alpha . A |u_b>`,
    /// the generator of `dc/dt = -i V c` for the electron charge `e = -1`.
    pub fn interaction_matrix(&self, a: &Vector3<f64>, t: f64) -> Matrix4<C> {
        let mut v = self.coupling[0] * C::from(a.x) + self.coupling[1] * C::from(a.y) + self.coupling[2] * C::from(a.z);
        let ph = C::from_polar(1.0, 2.0 * self.p0 * t);
        for r in 0..2 {
            for c in 2..4 {
                v[(r, c)] *= ph;
                v[(c, r)] *= ph.conj();
            }
        }
        v
    }
}
