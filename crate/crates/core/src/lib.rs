//! Spin- and helicity-resolved momentum distributions of electron-positron
//! pairs created from vacuum by homogeneous, time-dependent electric fields.
//!
//! Relativistic units are used throughout: `hbar = c = m_e = |e| = 1`, the
//! electron charge is `e = -1`, the critical field and the Compton time are 1.

pub mod bispinor;
pub mod cli;
pub mod dhw;
pub mod odeint;
pub mod pulse;
pub mod quad;
pub mod scan;
pub mod smatrix;
pub mod spinorial;
pub mod vortex;
