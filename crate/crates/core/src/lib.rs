//! Dissipative networks of coupled quantum harmonic oscillators in the
//! Gaussian regime.
//!
//! - [`network`]: network construction and the Hamiltonian matrix
//! - [`spectral`]: normal modes, bath couplings and damping rates
//! - [`dynamics`]: Gaussian-state evolution
//! - [`measures`]: synchronization and correlation measures
//! - [`tuning`]: frozen-mode engineering
//!
//! Units: frequencies in a reference ω₀, ħ = k_B = 1, vacuum variance ½.

pub mod dynamics;
pub mod measures;
pub mod network;
pub mod spectral;
pub mod tuning;

pub use dynamics::{Basis, GaussianState, NodePreparation, Trajectory};
pub use network::{NetworkSpec, RngSeed};
pub use spectral::{BathConfig, BathKind, ModeDecomposition};
