//! Longitudinal qubit readout by homodyne integration of a DPA output field.
//!
//! The measurement operator M̂ = √κ∫₀^τ dt Ẑ_out(t) integrates the output
//! quadrature at homodyne angle φ_h. Closed forms cover the semiclassically
//! pumped amplifier (two-photon drive Ω_2pd on the detected mode, stability
//! Ω_2pd < κ_s/4) and the fully quantum amplifier (qubit on the pump mode,
//! squeezed effective bath of cooperativity 𝒞 and squeeze parameter r_p).
//! SNR = |⟨M̂⟩_↑ − ⟨M̂⟩_↓| / √(⟨M̂_N²⟩_↑ + ⟨M̂_N²⟩_↓) and the measurement
//! error ε_m = ½erfc(SNR/2) quantify state discrimination.

use crate::analytic::special::{integrated_decay, measurement_error};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReadoutError {
    /// 4Ω_2pd ≥ κ_s: the driven mode has no stationary response.
    #[error("unstable drive: 4Ω_2pd = {lhs:.6e} ≥ κ_s = {rhs:.6e}")]
    Unstable { lhs: f64, rhs: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(&'static str),
}

/// Signal, noise and error probability of one readout configuration.
#[derive(Debug, Clone, Copy)]
pub struct SnrReport {
    /// Signal-to-noise ratio of the integrated homodyne record.
    pub snr: f64,
    /// SNR of the standard longitudinal readout at the same (χ_z, κ, τ).
    pub snr_std: f64,
    /// snr / snr_std.
    pub ratio: f64,
    /// ε_m = ½erfc(snr/2).
    pub measurement_error: f64,
    /// ε_m of the standard readout.
    pub measurement_error_std: f64,
}

fn check_sc(tau: f64, omega_2pd: f64, kappa_s: f64) -> Result<(), ReadoutError> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(ReadoutError::BadParameter("τ must be ≥ 0"));
    }
    if !kappa_s.is_finite() || kappa_s <= 0.0 {
        return Err(ReadoutError::BadParameter("κ_s must be positive"));
    }
    let lhs = 4.0 * omega_2pd;
    if !omega_2pd.is_finite() || lhs >= kappa_s {
        return Err(ReadoutError::Unstable { lhs, rhs: kappa_s });
    }
    if omega_2pd < 0.0 {
        return Err(ReadoutError::BadParameter("Ω_2pd must be ≥ 0"));
    }
    Ok(())
}

/// ⟨M̂⟩_↑ − ⟨M̂⟩_↓ for a qubit longitudinally coupled (strength χ_z, phase
/// φ_z) to the two-photon-driven mode, in closed form.
///
/// Both decaying terms enter with opposite signs; that pairing makes the
/// separation vanish at τ = 0 and is what direct integration of the mean
/// response kernels gives (see `sc_signal_separation_kernel`).
pub fn sc_signal_separation(
    tau: f64,
    chi_z: f64,
    omega_2pd: f64,
    kappa_s: f64,
    phi_h: f64,
    phi_z: f64,
    phi_2pd: f64,
) -> Result<f64, ReadoutError> {
    check_sc(tau, omega_2pd, kappa_s)?;
    let (k, o) = (kappa_s, omega_2pd);
    let kt = k * tau;
    let sin_s = (phi_h - phi_z).sin();
    let cos_c = (phi_h + phi_z - 2.0 * phi_2pd).cos();
    let d = k * k - 16.0 * o * o;
    let pref = 8.0 * chi_z * k / (d * d);
    let brace = (k * k * (2.0 - kt) + 16.0 * (2.0 + kt) * o * o) * sin_s
        - 4.0 * o * (k * (4.0 - kt) + 16.0 * o * o * tau) * cos_c;
    let f_minus = 8.0 * chi_z * k / ((k - 4.0 * o) * (k - 4.0 * o)) * (cos_c - sin_s);
    let f_plus = 8.0 * chi_z * k / ((k + 4.0 * o) * (k + 4.0 * o)) * (cos_c + sin_s);
    Ok(pref * brace + f_minus * (-0.5 * (k - 4.0 * o) * tau).exp()
        - f_plus * (-0.5 * (k + 4.0 * o) * tau).exp())
}

/// Independent route to the signal separation: the mean response decouples
/// into exponential relaxations at rates a_± = κ/2 ± 2Ω, whose double time
/// integrals are τ²g(a_±τ). Numerically robust at small τ and near threshold.
pub fn sc_signal_separation_kernel(
    tau: f64,
    chi_z: f64,
    omega_2pd: f64,
    kappa_s: f64,
    phi_h: f64,
    phi_z: f64,
    phi_2pd: f64,
) -> Result<f64, ReadoutError> {
    check_sc(tau, omega_2pd, kappa_s)?;
    let a_plus = 0.5 * kappa_s + 2.0 * omega_2pd;
    let a_minus = 0.5 * kappa_s - 2.0 * omega_2pd;
    let p = tau * tau * integrated_decay(a_plus * tau);
    let q = tau * tau * integrated_decay(a_minus * tau);
    let sin_s = (phi_h - phi_z).sin();
    let cos_c = (phi_h + phi_z - 2.0 * phi_2pd).cos();
    Ok(2.0 * kappa_s * chi_z * (-sin_s * (p + q) + cos_c * (q - p)))
}

/// Measurement noise ⟨M̂_N²⟩ of the two-photon-driven mode, in closed form.
/// Qubit-state independent; minimized at φ_h − φ_2pd = π/4.
pub fn sc_noise(
    tau: f64,
    omega_2pd: f64,
    kappa_s: f64,
    phi_h: f64,
    phi_2pd: f64,
) -> Result<f64, ReadoutError> {
    check_sc(tau, omega_2pd, kappa_s)?;
    let (k, o) = (kappa_s, omega_2pd);
    let kt = k * tau;
    let s2 = (2.0 * (phi_h - phi_2pd)).sin();
    let d = k * k - 16.0 * o * o;
    let pref = 16.0 * k * k * o / (d * d * d);
    let brace = (k * k * k * (2.0 - kt) + 32.0 * (3.0 * k + 8.0 * o * o * tau) * o * o) * s2
        - 8.0 * k * k * (3.0 - kt) * o
        - 128.0 * (1.0 + kt) * o * o * o;
    let z = |sign: f64| {
        16.0 * k * k * o / ((k + sign * 4.0 * o).powi(3)) * (1.0 + sign * s2)
    };
    Ok(kt + pref * brace + z(-1.0) * (-0.5 * (k - 4.0 * o) * tau).exp()
        - z(1.0) * (-0.5 * (k + 4.0 * o) * tau).exp())
}

/// Independent route to the noise: the stationary output-fluctuation
/// correlations reduce to two exponentials at rates p = (κ−4Ω)/2 and
/// q = (κ+4Ω)/2, and ∫₀^τ(τ−u)e^{−ru}du = τ²g(rτ) finishes the integral.
pub fn sc_noise_kernel(
    tau: f64,
    omega_2pd: f64,
    kappa_s: f64,
    phi_h: f64,
    phi_2pd: f64,
) -> Result<f64, ReadoutError> {
    check_sc(tau, omega_2pd, kappa_s)?;
    let (k, o) = (kappa_s, omega_2pd);
    let s2 = (2.0 * (phi_h - phi_2pd)).sin();
    let p = 0.5 * (k - 4.0 * o);
    let q = 0.5 * (k + 4.0 * o);
    let weighted = (1.0 - s2) * integrated_decay(p * tau) / p - (1.0 + s2) * integrated_decay(q * tau) / q;
    Ok(k * tau + 2.0 * k * k * o * tau * tau * weighted)
}

/// SNR of the standard longitudinal readout (no squeezing):
/// 8χ_zτ·B(κτ)/√(2κτ) with B(x) = 1 − (2/x)(1 − e^{−x/2}) = (x/2)g(x/2).
pub fn snr_std(chi_z: f64, kappa: f64, tau: f64) -> f64 {
    debug_assert!(kappa > 0.0 && tau >= 0.0);
    if tau == 0.0 {
        return 0.0;
    }
    let kt = kappa * tau;
    let b = 0.5 * kt * integrated_decay(0.5 * kt);
    8.0 * chi_z * tau * b / (2.0 * kt).sqrt()
}

/// SNR of the two-photon-driven readout at the optimal phase choice
/// φ_h = φ_2pd + π/4 = φ_z + π/2 (minimal noise, maximal signal).
pub fn snr_sc(
    tau: f64,
    chi_z: f64,
    omega_2pd: f64,
    kappa_s: f64,
) -> Result<SnrReport, ReadoutError> {
    let phi_h = 0.0;
    let phi_2pd = -std::f64::consts::FRAC_PI_4;
    let phi_z = -std::f64::consts::FRAC_PI_2;
    let signal = sc_signal_separation(tau, chi_z, omega_2pd, kappa_s, phi_h, phi_z, phi_2pd)?;
    let noise = sc_noise(tau, omega_2pd, kappa_s, phi_h, phi_2pd)?;
    let snr = signal.abs() / (2.0 * noise).sqrt();
    let std = snr_std(chi_z, kappa_s, tau);
    Ok(SnrReport {
        snr,
        snr_std: std,
        ratio: if std > 0.0 { snr / std } else { f64::NAN },
        measurement_error: measurement_error(snr),
        measurement_error_std: measurement_error(std),
    })
}

/// Steady intracavity squeezing of the pump mode driven by signal loss:
/// ξ² = (1 + 4𝒞e^{−2r_p})/(1 + 4𝒞) ∈ (e^{−2r_p}, 1].
pub fn fq_xi2_ss(coop: f64, r_p: f64) -> f64 {
    debug_assert!(coop >= 0.0 && r_p >= 0.0);
    let four_c = 4.0 * coop;
    (1.0 + four_c * (-2.0 * r_p).exp()) / (1.0 + four_c)
}

/// ⟨M̂⟩_↑ − ⟨M̂⟩_↓ for the qubit on the pump mode: 8χ_zτ|sin(φ_h−φ_z)|·B(κτ).
/// Identical to the standard readout's separation; squeezing acts on noise.
pub fn fq_signal_separation(tau: f64, chi_z: f64, kappa: f64, phi_h: f64, phi_z: f64) -> f64 {
    debug_assert!(kappa > 0.0 && tau >= 0.0);
    let kt = kappa * tau;
    let b = 0.5 * kt * integrated_decay(0.5 * kt);
    8.0 * chi_z * tau * (phi_h - phi_z).sin().abs() * b
}

/// ⟨M̂_N²⟩ = κτ{1/(4𝒞+1) + [4𝒞/(4𝒞+1)][cosh2r_p − cos2φ_h·sinh2r_p]}.
///
/// Evaluated through cosh2r − cos2φ·sinh2r = e^{−2r} + (1 − cos2φ)sinh2r,
/// which is exact and avoids the e^{−2r}-scale cancellation at φ_h near 0;
/// at φ_h = 0 the noise is then κτ·fq_xi2_ss to the last bit.
pub fn fq_noise(tau: f64, kappa: f64, coop: f64, r_p: f64, phi_h: f64) -> f64 {
    debug_assert!(kappa > 0.0 && tau >= 0.0 && coop >= 0.0 && r_p >= 0.0);
    let four_c = 4.0 * coop;
    let squeezed = (-2.0 * r_p).exp() + (1.0 - (2.0 * phi_h).cos()) * (2.0 * r_p).sinh();
    kappa * tau * (1.0 + four_c * squeezed) / (1.0 + four_c)
}

/// SNR improvement over the standard readout: √[(1+4𝒞)/(1+4𝒞e^{−2r_p})],
/// independent of τ and χ_z; → e^{r_p} for 𝒞 ≫ e^{2r_p}/4.
pub fn snr_ratio_fq(coop: f64, r_p: f64) -> f64 {
    1.0 / fq_xi2_ss(coop, r_p).sqrt()
}

/// SNR of the pump-mode readout at optimal phases (φ_z = π/2, φ_h = 0).
pub fn snr_fq(tau: f64, chi_z: f64, kappa: f64, coop: f64, r_p: f64) -> SnrReport {
    let std = snr_std(chi_z, kappa, tau);
    let ratio = snr_ratio_fq(coop, r_p);
    let snr = ratio * std;
    SnrReport {
        snr,
        snr_std: std,
        ratio,
        measurement_error: measurement_error(snr),
        measurement_error_std: measurement_error(std),
    }
}

/// Output-field squeezing degree of the two-photon-driven mode without the
/// qubit: r_out = ln[(κ + 4Ω)/(κ − 4Ω)].
pub fn r_out_sc(omega_2pd: f64, kappa_s: f64) -> Result<f64, ReadoutError> {
    check_sc(0.0, omega_2pd, kappa_s)?;
    Ok(((kappa_s + 4.0 * omega_2pd) / (kappa_s - 4.0 * omega_2pd)).ln())
}

/// Inverse of `r_out_sc`: Ω_2pd = κ_s·tanh(r_out/2)/4.
pub fn omega_2pd_for_r_out(r_out: f64, kappa_s: f64) -> Result<f64, ReadoutError> {
    if !r_out.is_finite() || r_out < 0.0 {
        return Err(ReadoutError::BadParameter("r_out must be ≥ 0"));
    }
    if !kappa_s.is_finite() || kappa_s <= 0.0 {
        return Err(ReadoutError::BadParameter("κ_s must be positive"));
    }
    Ok(0.25 * kappa_s * (0.5 * r_out).tanh())
}
