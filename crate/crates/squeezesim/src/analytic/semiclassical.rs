//! Semiclassically pumped degenerate parametric amplifier, in closed form.
//!
//! The signal mode under two-photon driving Ω_2pd(â² + â†²), detuning Δ_s and
//! photon loss κ_s has Gaussian dynamics; ⟨â†â⟩(t) and ⟨ââ⟩(t) follow closed
//! hyperbolic expressions in ω = √(4Ω² − Δ²), complex-safe across the
//! oscillatory (ω imaginary) and amplifying (ω real) regimes. The steady-state
//! squeezing parameter ξ² = 1 + 2(⟨â†â⟩ − |⟨ââ⟩|) reduces to 1/(1 + μ) with
//! μ = 4Ω/√(κ² + 4Δ²), bounded above 1/2 (the 3 dB limit); the residual
//! pump-signal coupling corrects it at second order in the nonlinearity ratio
//! λ = 4g/√(2κ_pκ_s).

use crate::analytic::special::sinhc;
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemiclassicalError {
    /// 16Ω² ≥ κ² + 4Δ²: the two-photon drive overcomes loss and detuning.
    #[error("unstable drive: 16Ω² = {lhs:.6e} ≥ κ² + 4Δ² = {rhs:.6e}")]
    Unstable { lhs: f64, rhs: f64 },
    /// The nonlinear-corrected form needs −1 < δ < 0 (μ = 1 + δ below 1).
    #[error("δ must lie in (−1, 0), got {0}")]
    BadDelta(f64),
    /// The μ-form needs 0 ≤ μ < 1.
    #[error("μ must lie in [0, 1), got {0}")]
    BadMu(f64),
    #[error("bad parameter: {0}")]
    BadParameter(&'static str),
}

/// ω = √(4Ω² − Δ²): real when amplification beats detuning, else imaginary.
pub fn sc_omega(delta_s: f64, omega_2pd: f64) -> C64 {
    C64::new(4.0 * omega_2pd * omega_2pd - delta_s * delta_s, 0.0).sqrt()
}

/// μ = 4|Ω|/√(κ² + 4Δ²); the steady state exists for μ < 1.
pub fn sc_mu(delta_s: f64, omega_2pd: f64, kappa_s: f64) -> f64 {
    4.0 * omega_2pd.abs() / (kappa_s * kappa_s + 4.0 * delta_s * delta_s).sqrt()
}

/// κ² + 4Δ² − 16Ω² (= κ² − 4ω²), positive exactly on the stable domain.
fn stable_denom(delta_s: f64, omega_2pd: f64, kappa_s: f64) -> Result<f64, SemiclassicalError> {
    if !delta_s.is_finite() || !omega_2pd.is_finite() || !kappa_s.is_finite() {
        return Err(SemiclassicalError::BadParameter("non-finite input"));
    }
    if kappa_s <= 0.0 {
        return Err(SemiclassicalError::BadParameter("κ_s must be positive"));
    }
    let lhs = 16.0 * omega_2pd * omega_2pd;
    let rhs = kappa_s * kappa_s + 4.0 * delta_s * delta_s;
    if lhs >= rhs {
        return Err(SemiclassicalError::Unstable { lhs, rhs });
    }
    Ok(rhs - lhs)
}

/// (e^{−κt}·cosh(2ωt), e^{−κt}·sinh(2ωt)/ω), overflow-safe for any κt.
///
/// Stability keeps Re(2ω) < κ, so both split exponentials decay; near ω = 0
/// the sinh(2ωt)/ω factor continues through the boundary as 2t·sinhc(2ωt).
fn decaying_hyperbolics(t: f64, omega: C64, kappa: f64) -> (C64, C64) {
    let z = omega * (2.0 * t);
    if z.norm() < 0.5 {
        let decay = (-kappa * t).exp();
        (z.cosh() * decay, sinhc(z) * (2.0 * t * decay))
    } else {
        let k = C64::new(kappa, 0.0);
        let u = ((omega * 2.0 - k) * t).exp();
        let v = ((omega * -2.0 - k) * t).exp();
        ((u + v) * 0.5, (u - v) / (omega * 2.0))
    }
}

/// Intracavity moments (⟨â†â⟩(t), ⟨ââ⟩(t)) from the vacuum at t = 0.
pub fn sc_moments(
    t: f64,
    delta_s: f64,
    omega_2pd: f64,
    kappa_s: f64,
) -> Result<(f64, C64), SemiclassicalError> {
    let denom = stable_denom(delta_s, omega_2pd, kappa_s)?;
    if !(t >= 0.0) {
        return Err(SemiclassicalError::BadParameter("time must be ≥ 0"));
    }
    let omega = sc_omega(delta_s, omega_2pd);
    let (ec, es) = decaying_hyperbolics(t, omega, kappa_s);
    let drive2 = omega_2pd * omega_2pd;
    // ⟨â†â⟩(t) = 8Ω²/(κ²−4ω²) − (4Ω²/(κ²−4ω²))·e^{−κt}[2cosh(2ωt) + κ·sinh(2ωt)/ω]
    let n = 8.0 * drive2 / denom - (ec * 2.0 + es * kappa_s) * (4.0 * drive2 / denom);
    debug_assert!(n.im.abs() <= 1e-10 * n.re.abs().max(1.0));
    // ⟨ââ⟩(t) = −2Ω(2Δ+iκ)/(κ²−4ω²)
    //           + (2Ω/(κ²−4ω²))·e^{−κt}[(2Δ+iκ)cosh(2ωt) − (2iΔ²−Δκ−8iΩ²)sinh(2ωt)/ω]
    let chirp = C64::new(2.0 * delta_s, kappa_s);
    let skew = C64::new(
        -delta_s * kappa_s,
        2.0 * delta_s * delta_s - 8.0 * drive2,
    );
    let m = chirp * (-2.0 * omega_2pd / denom) + (ec * chirp - es * skew) * (2.0 * omega_2pd / denom);
    Ok((n.re, m))
}

/// ξ²(t) = 1 + 2(⟨â†â⟩ − |⟨ââ⟩|); vacuum gives 1, squeezing pushes below 1.
pub fn sc_xi2(
    t: f64,
    delta_s: f64,
    omega_2pd: f64,
    kappa_s: f64,
) -> Result<f64, SemiclassicalError> {
    let (n, m) = sc_moments(t, delta_s, omega_2pd, kappa_s)?;
    Ok(1.0 + 2.0 * (n - m.norm()))
}

/// Steady-state squeezing 1/(1 + μ) ∈ (1/2, 1]: the 3 dB limit.
pub fn sc_xi2_ss(
    delta_s: f64,
    omega_2pd: f64,
    kappa_s: f64,
) -> Result<f64, SemiclassicalError> {
    stable_denom(delta_s, omega_2pd, kappa_s)?;
    Ok(1.0 / (1.0 + sc_mu(delta_s, omega_2pd, kappa_s)))
}

/// Nonlinearity-corrected steady squeezing, δ-form (μ = 1 + δ, δ < 0).
///
/// Canonical near the 3 dB point where the μ-form's 1/(1−μ) is delicate:
/// ξ² = 1/(2+δ) − λ²(1+δ)/[2δ(2+δ)²]·[κ_r(1+δ)/(2+κ_r)
///      + (4 + κ_r + (2+κ_r)δ + κ_rδ²)/((2+δ)(4+κ_r+2δ))].
pub fn sc_xi2_ss_nonlinear(
    delta: f64,
    lambda: f64,
    kappa_r: f64,
) -> Result<f64, SemiclassicalError> {
    if !(delta > -1.0 && delta < 0.0) {
        return Err(SemiclassicalError::BadDelta(delta));
    }
    check_nonlinear_inputs(lambda, kappa_r)?;
    let d = delta;
    let bracket = kappa_r * (1.0 + d) / (2.0 + kappa_r)
        + (4.0 + kappa_r + (2.0 + kappa_r) * d + kappa_r * d * d)
            / ((2.0 + d) * (4.0 + kappa_r + 2.0 * d));
    let two_d = 2.0 + d;
    Ok(1.0 / two_d - lambda * lambda * (1.0 + d) / (2.0 * d * two_d * two_d) * bracket)
}

/// Nonlinearity-corrected steady squeezing, μ-form (0 ≤ μ < 1).
///
/// ξ² = 1/(1+μ) + λ²μ/[2(1+μ)²(1−μ)]·[μκ_r/(κ_r+2)
///      + (κ_r(1−μ+μ²) + 2(1+μ))/((1+μ)(κ_r+2(1+μ)))].
pub fn sc_xi2_ss_nonlinear_mu(
    mu: f64,
    lambda: f64,
    kappa_r: f64,
) -> Result<f64, SemiclassicalError> {
    if !(mu >= 0.0 && mu < 1.0) {
        return Err(SemiclassicalError::BadMu(mu));
    }
    check_nonlinear_inputs(lambda, kappa_r)?;
    let one_mu = 1.0 + mu;
    let bracket = mu * kappa_r / (kappa_r + 2.0)
        + (kappa_r * (1.0 - mu + mu * mu) + 2.0 * one_mu) / (one_mu * (kappa_r + 2.0 * one_mu));
    Ok(1.0 / one_mu + lambda * lambda * mu / (2.0 * one_mu * one_mu * (1.0 - mu)) * bracket)
}

fn check_nonlinear_inputs(lambda: f64, kappa_r: f64) -> Result<(), SemiclassicalError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(SemiclassicalError::BadParameter("λ must be ≥ 0"));
    }
    if !kappa_r.is_finite() || kappa_r <= 0.0 {
        return Err(SemiclassicalError::BadParameter("κ_r must be positive"));
    }
    Ok(())
}

/// δ* = −(λ/2)·√((2+3κ_r)/(2+κ_r)): the offset where the corrected squeezing
/// approaches its 1/2 floor as λ → 0.
pub fn sc_optimal_delta(lambda: f64, kappa_r: f64) -> f64 {
    -(lambda / 2.0) * ((2.0 + 3.0 * kappa_r) / (2.0 + kappa_r)).sqrt()
}
