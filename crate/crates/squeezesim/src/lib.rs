//! Simulator and analytics for a fully quantum degenerate parametric
//! amplifier (DPA): a pump mode coupled to a two-photon-driven signal mode
//! whose Bogoliubov quasi-mode acts as a squeezed bath.
//!
//! The crate has three layers:
//!
//! * [`fock`] + [`linalg`]: truncated Fock tensor products, sparse operators,
//!   dense density matrices.
//! * [`lindblad`]: master-equation models ρ̇ = −i[Ĥ(t), ρ] + Σ γ_jk
//!   (L̂_j ρ L̂_k† − ½{L̂_k† L̂_j, ρ}) with fixed-step and adaptive
//!   integrators and steady-state solvers.
//! * [`dpa`] + [`analytic`]: model builders for the exact displaced,
//!   Bogoliubov-frame, effective two-mode, and qubit-readout systems, plus
//!   closed-form steady-state squeezing, readout SNR / assignment error, and
//!   temporal-mode Gaussian statistics.
//!
//! [`scenario`] wires everything into reproducible figure/table pipelines
//! (CSV + optional SVG) exposed by the `squeezesim` CLI.
//!
//! Conventions: ħ = 1, rates and frequencies share one unit (the comparison
//! presets use the three-wave coupling g); quadratures X̂ = (â + â†)/2 so the
//! vacuum variance is 1/4; squeezing is reported as ξ² = 1 + 2(⟨â†â⟩ −
//! |⟨ââ⟩|) (optionally with centered moments) and in decibels as
//! −10·log₁₀ ξ².

pub mod analytic;
pub mod dpa;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod scenario;

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Imaginary unit shorthand.
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// 1 as a complex scalar.
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// 0 as a complex scalar.
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
