//! Phase-space statistics of the integrated output temporal mode
//!
//! A homodyne record over a window τ measures the single bosonic mode
//! Â = τ^{−1/2}∫₀^τ â_out(t)dt with quadratures X̂ = (Â+Â†)/2 and
//! Ŷ = (Â−Â†)/(2i), so that [X̂,Ŷ] = i/2 and the vacuum has
//! Var(X̂) = Var(Ŷ) = 1/4. The rotated quadrature X̂_φ = (Âe^{−iφ}+Â†e^{iφ})/2
//! relates to the integrated homodyne signal M̂_φ = √κ∫₀^τ Ẑ_out dt through
//! X̂_φ = M̂_φ/(2√(κτ)), which converts the readout module's signal and noise
//! into a mean vector and a 2×2 covariance matrix D. Both qubit readout
//! chains are covered: the semiclassically pumped signal mode (covariances
//! from adaptive quadrature of the output noise kernel) and the fully quantum
//! pump mode (closed form, τ-independent squeezing level). A Gaussian Wigner
//! field on a rectangular grid renders the resulting phase-space picture.

use crate::analytic::quad::{adaptive_simpson, QuadError};
use crate::analytic::special::integrated_decay;
use thiserror::Error;

/// Absolute tolerance handed to the adaptive quadrature for every mean and
/// covariance integral.
pub const QUAD_ABS_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TemporalError {
    /// The two-photon drive exceeds the semiclassical threshold 4Ω_2pd < κ_s.
    #[error("unstable two-photon drive: 4Ω_2pd = {lhs} must stay below κ_s = {rhs}")]
    Unstable { lhs: f64, rhs: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    /// The covariance matrix cannot be inverted for a Wigner density.
    #[error("covariance matrix is not positive definite (det = {det:.3e})")]
    SingularCovariance { det: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(&'static str),
}

/// First and second moments of the temporal mode for one qubit eigenstate.
///
/// Vacuum reference: zero means and D = diag(1/4, 1/4).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalModeStats {
    /// ⟨X̂⟩, dimensionless quadrature units.
    pub mean_x: f64,
    /// ⟨Ŷ⟩, dimensionless quadrature units.
    pub mean_y: f64,
    /// Var(X̂).
    pub d_xx: f64,
    /// Symmetrized covariance ½⟨{X̂−⟨X̂⟩, Ŷ−⟨Ŷ⟩}⟩.
    pub d_xy: f64,
    /// Var(Ŷ).
    pub d_yy: f64,
}

impl TemporalModeStats {
    /// det D; a physical Gaussian state obeys det D ≥ 1/16.
    pub fn det(&self) -> f64 {
        self.d_xx * self.d_yy - self.d_xy * self.d_xy
    }

    /// Smallest quadrature variance over all angles, min_φ Var(X̂_φ).
    pub fn squeezed_variance(&self) -> f64 {
        let half_tr = 0.5 * (self.d_xx + self.d_yy);
        half_tr - self.eigen_split()
    }

    /// Largest quadrature variance over all angles, max_φ Var(X̂_φ).
    pub fn antisqueezed_variance(&self) -> f64 {
        let half_tr = 0.5 * (self.d_xx + self.d_yy);
        half_tr + self.eigen_split()
    }

    /// Var(X̂_φ) reconstructed from the covariance matrix.
    pub fn variance_at(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        c * c * self.d_xx + s * s * self.d_yy + 2.0 * s * c * self.d_xy
    }

    fn eigen_split(&self) -> f64 {
        let half_diff = 0.5 * (self.d_xx - self.d_yy);
        (half_diff * half_diff + self.d_xy * self.d_xy).sqrt()
    }
}

/// Readout chain on the semiclassically pumped signal mode: a longitudinal
/// qubit drive χ_z σ_z(âe^{−iφ_z}+â†e^{iφ_z}) alongside the two-photon drive
/// Ω_2pd(â²e^{−2iφ_2pd}+â†²e^{2iφ_2pd}) on a mode decaying at κ_s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScReadoutSpec {
    /// Longitudinal coupling χ_z, units of κ_s.
    pub chi_z: f64,
    /// Two-photon drive amplitude Ω_2pd; stability needs 4Ω_2pd < κ_s.
    pub omega_2pd: f64,
    /// Signal-mode linewidth κ_s > 0.
    pub kappa_s: f64,
    /// Phase of the longitudinal drive.
    pub phi_z: f64,
    /// Phase of the two-photon drive; squeezes the axis φ_2pd + π/4.
    pub phi_2pd: f64,
}

/// Readout chain on the fully quantum pump mode: longitudinal coupling χ_z at
/// phase φ_z on a mode whose output is squeezed to fidelity set by the
/// cooperativity 𝒞 and the pump squeezing parameter r_p. The squeezed output
/// axis is taken along X̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FqReadoutSpec {
    /// Longitudinal coupling χ_z, units of κ.
    pub chi_z: f64,
    /// Pump-mode linewidth κ > 0.
    pub kappa: f64,
    /// Cooperativity 𝒞 = 𝒢²/(κ_sκ_p) ≥ 0.
    pub cooperativity: f64,
    /// Pump squeezing parameter r_p ≥ 0.
    pub r_p: f64,
    /// Phase of the longitudinal drive.
    pub phi_z: f64,
}

fn check_common(tau: f64, kappa: f64, sigma: f64) -> Result<(), TemporalError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(TemporalError::BadParameter(
            "window τ must be positive for a normalizable temporal mode",
        ));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(TemporalError::BadParameter("linewidth must be positive"));
    }
    if sigma != 1.0 && sigma != -1.0 {
        return Err(TemporalError::BadParameter(
            "σ selects a qubit eigenstate and must be ±1",
        ));
    }
    Ok(())
}

/// Temporal-mode statistics of the semiclassically pumped readout for the
/// qubit eigenstate σ = ±1.
///
/// Means come from integrating the closed-form ⟨â(t)⟩ over the window; each
/// covariance entry comes from the triangular integral of the output noise
/// kernel, Var(X̂_φ) = 1/4 + (2τ)⁻¹∫₀^τ(τ−u)K_φ(u)du, all by adaptive
/// quadrature at absolute tolerance `QUAD_ABS_TOL`.
pub fn sc_temporal_mode_stats(
    tau: f64,
    spec: &ScReadoutSpec,
    sigma: f64,
) -> Result<TemporalModeStats, TemporalError> {
    let (chi, o, k) = (spec.chi_z, spec.omega_2pd, spec.kappa_s);
    check_common(tau, k, sigma)?;
    if !(chi.is_finite() && o.is_finite() && spec.phi_z.is_finite() && spec.phi_2pd.is_finite()) {
        return Err(TemporalError::BadParameter("parameters must be finite"));
    }
    if !(o >= 0.0) {
        return Err(TemporalError::BadParameter(
            "two-photon drive amplitude must be ≥ 0",
        ));
    }
    if 4.0 * o >= k {
        return Err(TemporalError::Unstable {
            lhs: 4.0 * o,
            rhs: k,
        });
    }
    // Mean field in the frame rotated by φ_2pd: the quadratures p = x+y and
    // q = x−y relax independently at a± = κ/2 ± 2Ω toward drives set by
    // ψ = φ_z − φ_2pd.
    let a_plus = 0.5 * k + 2.0 * o;
    let a_minus = 0.5 * k - 2.0 * o;
    let psi = spec.phi_z - spec.phi_2pd;
    let drive_p = sigma * chi * (psi.sin() - psi.cos());
    let drive_q = sigma * chi * (psi.sin() + psi.cos());
    let p = |t: f64| drive_p * (-(-a_plus * t).exp_m1()) / a_plus;
    let q = |t: f64| drive_q * (-(-a_minus * t).exp_m1()) / a_minus;
    let ix = adaptive_simpson(&|t| 0.5 * (p(t) + q(t)), 0.0, tau, QUAD_ABS_TOL)?;
    let iy = adaptive_simpson(&|t| 0.5 * (p(t) - q(t)), 0.0, tau, QUAD_ABS_TOL)?;
    // ⟨Â⟩ = √(κ/τ)∫⟨â⟩dt with ⟨â⟩ = e^{iφ_2pd}(x + iy).
    let scale = (k / tau).sqrt();
    let (s2pd, c2pd) = spec.phi_2pd.sin_cos();
    let mean_x = scale * (ix * c2pd - iy * s2pd);
    let mean_y = scale * (ix * s2pd + iy * c2pd);

    // Output noise kernel at homodyne angle φ:
    // K_φ(u) = κΩ[(1−s₂)e^{−a₋u}/a₋ − (1+s₂)e^{−a₊u}/a₊], s₂ = sin2(φ−φ_2pd).
    let variance_at = |phi: f64| -> Result<f64, TemporalError> {
        let s2 = (2.0 * (phi - spec.phi_2pd)).sin();
        let kernel = |u: f64| {
            k * o
                * ((1.0 - s2) * (-a_minus * u).exp() / a_minus
                    - (1.0 + s2) * (-a_plus * u).exp() / a_plus)
        };
        let tri = adaptive_simpson(&|u| (tau - u) * kernel(u), 0.0, tau, QUAD_ABS_TOL)?;
        Ok(0.25 + tri / (2.0 * tau))
    };
    let d_xx = variance_at(0.0)?;
    let d_yy = variance_at(std::f64::consts::FRAC_PI_2)?;
    let d_xy = variance_at(std::f64::consts::FRAC_PI_4)? - 0.5 * (d_xx + d_yy);
    Ok(TemporalModeStats {
        mean_x,
        mean_y,
        d_xx,
        d_xy,
        d_yy,
    })
}

/// Temporal-mode statistics of the fully quantum pump readout for the qubit
/// eigenstate σ = ±1, in closed form.
///
/// The empty-cavity input-output filter is all-pass for white squeezed input,
/// so the covariance matrix carries the steady squeezing level at any window:
/// D = diag(ξ²_fq, ξ̄²_fq)/4 with ξ²_fq = (1+4𝒞e^{−2r_p})/(1+4𝒞) and the
/// anti-squeezed partner e^{−2r_p} → e^{+2r_p}. The mean displaces along
/// φ_z − π/2 by |⟨Â⟩| = (2χ_z/κ)√(κτ)·B(κτ).
pub fn fq_temporal_mode_stats(
    tau: f64,
    spec: &FqReadoutSpec,
    sigma: f64,
) -> Result<TemporalModeStats, TemporalError> {
    let (chi, k, coop, r_p) = (spec.chi_z, spec.kappa, spec.cooperativity, spec.r_p);
    check_common(tau, k, sigma)?;
    if !(chi.is_finite() && spec.phi_z.is_finite()) {
        return Err(TemporalError::BadParameter("parameters must be finite"));
    }
    if !(coop.is_finite() && coop >= 0.0) {
        return Err(TemporalError::BadParameter("cooperativity must be ≥ 0"));
    }
    if !(r_p.is_finite() && r_p >= 0.0) {
        return Err(TemporalError::BadParameter(
            "squeezing parameter must be ≥ 0",
        ));
    }
    let kt = k * tau;
    let b = 0.5 * kt * integrated_decay(0.5 * kt);
    let amp = sigma * (2.0 * chi / k) * kt.sqrt() * b;
    let (sz, cz) = spec.phi_z.sin_cos();
    let four_c = 4.0 * coop;
    let denom = 1.0 + four_c;
    Ok(TemporalModeStats {
        mean_x: amp * sz,
        mean_y: -amp * cz,
        d_xx: 0.25 * (1.0 + four_c * (-2.0 * r_p).exp()) / denom,
        d_xy: 0.0,
        d_yy: 0.25 * (1.0 + four_c * (2.0 * r_p).exp()) / denom,
    })
}

/// Rectangular phase-space grid with nodes x_i = x_min + i·Δx (and likewise
/// in y), inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Node count along x, ≥ 2.
    pub nx: usize,
    /// Node count along y, ≥ 2.
    pub ny: usize,
}

impl PhaseSpaceGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, TemporalError> {
        let finite = x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite();
        if !finite {
            return Err(TemporalError::BadParameter("grid bounds must be finite"));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(TemporalError::BadParameter(
                "grid bounds must satisfy max > min",
            ));
        }
        if nx < 2 || ny < 2 {
            return Err(TemporalError::BadParameter(
                "grid needs at least two nodes per axis",
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// Grid covering every listed state out to ±n_σ standard deviations.
    pub fn spanning(
        states: &[TemporalModeStats],
        n_sigma: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, TemporalError> {
        if states.is_empty() {
            return Err(TemporalError::BadParameter("no states to span"));
        }
        if !(n_sigma.is_finite() && n_sigma > 0.0) {
            return Err(TemporalError::BadParameter("σ-extent must be positive"));
        }
        let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for s in states {
            let (sx, sy) = (s.d_xx.max(0.0).sqrt(), s.d_yy.max(0.0).sqrt());
            bounds[0] = bounds[0].min(s.mean_x - n_sigma * sx);
            bounds[1] = bounds[1].max(s.mean_x + n_sigma * sx);
            bounds[2] = bounds[2].min(s.mean_y - n_sigma * sy);
            bounds[3] = bounds[3].max(s.mean_y + n_sigma * sy);
        }
        Self::new(bounds[0], bounds[1], bounds[2], bounds[3], nx, ny)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy()
    }
}

/// Wigner density sampled on a grid; `values[iy*nx + ix]` is W(x_ix, y_iy).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerField {
    /// Trapezoid-rule mass ∬W dx dy; approaches 1 as the grid covers the state.
    pub fn integral(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut sum = 0.0;
        for iy in 0..ny {
            let wy = edge(iy, ny);
            for ix in 0..nx {
                sum += wy * edge(ix, nx) * self.values[iy * nx + ix];
            }
        }
        sum * self.grid.dx() * self.grid.dy()
    }
}

/// Gaussian Wigner density of a temporal-mode state:
/// W(x,y) = exp(−½ GᵀD⁻¹G)/(2π√det D) with G the offset from the mean.
pub fn gaussian_wigner(
    stats: &TemporalModeStats,
    grid: &PhaseSpaceGrid,
) -> Result<WignerField, TemporalError> {
    let det = stats.det();
    // Positive definiteness: det > 0 together with a positive diagonal entry.
    if !(det > f64::MIN_POSITIVE && stats.d_xx > 0.0) {
        return Err(TemporalError::SingularCovariance { det });
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let (ixx, ixy, iyy) = (stats.d_yy / det, -stats.d_xy / det, stats.d_xx / det);
    let mut values = Vec::with_capacity(grid.nx * grid.ny);
    for iy in 0..grid.ny {
        let gy = grid.y(iy) - stats.mean_y;
        for ix in 0..grid.nx {
            let gx = grid.x(ix) - stats.mean_x;
            let quad_form = ixx * gx * gx + 2.0 * ixy * gx * gy + iyy * gy * gy;
            values.push(norm * (-0.5 * quad_form).exp());
        }
    }
    Ok(WignerField { grid: *grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::readout::{
        fq_signal_separation, fq_xi2_ss, omega_2pd_for_r_out, sc_noise, sc_signal_separation_kernel,
    };
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn sc_spec(chi_z: f64, omega_2pd: f64, phi_z: f64, phi_2pd: f64) -> ScReadoutSpec {
        ScReadoutSpec {
            chi_z,
            omega_2pd,
            kappa_s: 1.0,
            phi_z,
            phi_2pd,
        }
    }

    #[test]
    fn undriven_mode_is_vacuum() {
        let sc = sc_temporal_mode_stats(1.7, &sc_spec(0.0, 0.0, 0.3, -0.9), 1.0).unwrap();
        assert_eq!(sc.mean_x, 0.0);
        assert_eq!(sc.mean_y, 0.0);
        assert!((sc.d_xx - 0.25).abs() < 1e-12);
        assert!((sc.d_yy - 0.25).abs() < 1e-12);
        assert!(sc.d_xy.abs() < 1e-12);

        let spec = FqReadoutSpec {
            chi_z: 0.0,
            kappa: 1.0,
            cooperativity: 0.0,
            r_p: 0.7,
            phi_z: 0.0,
        };
        let fq = fq_temporal_mode_stats(0.4, &spec, -1.0).unwrap();
        assert_eq!(fq.mean_x, 0.0);
        assert_eq!((fq.d_xx, fq.d_xy, fq.d_yy), (0.25, 0.0, 0.25));
        assert_eq!(fq.squeezed_variance(), 0.25);
        assert_eq!(fq.antisqueezed_variance(), 0.25);
    }

    #[test]
    fn qubit_flip_mirrors_the_mean() {
        let spec = sc_spec(0.8, 0.13, -FRAC_PI_2, -FRAC_PI_4);
        let up = sc_temporal_mode_stats(2.0, &spec, 1.0).unwrap();
        let down = sc_temporal_mode_stats(2.0, &spec, -1.0).unwrap();
        assert_eq!(up.mean_x, -down.mean_x);
        assert_eq!(up.mean_y, -down.mean_y);
        assert_eq!((up.d_xx, up.d_xy, up.d_yy), (down.d_xx, down.d_xy, down.d_yy));
    }

    #[test]
    fn mean_separation_matches_signal_formula() {
        // 2√(κτ)·(⟨X̂_φ⟩₊ − ⟨X̂_φ⟩₋) must equal the readout module's ⟨M̂⟩
        // separation for every homodyne angle.
        let tau = 1.3;
        for &(chi, o, phi_z, phi_2pd) in &[
            (1.0, 0.2, -FRAC_PI_2, -FRAC_PI_4),
            (0.5, 0.05, 0.8, 0.3),
            (2.0, 0.0, 1.9, -1.1),
        ] {
            let spec = sc_spec(chi, o, phi_z, phi_2pd);
            let s = sc_temporal_mode_stats(tau, &spec, 1.0).unwrap();
            for phi_h in [0.0, 0.7, -1.2, FRAC_PI_2] {
                let from_mode = 4.0 * tau.sqrt() * (s.mean_x * phi_h.cos() + s.mean_y * phi_h.sin());
                let reference =
                    sc_signal_separation_kernel(tau, chi, o, 1.0, phi_h, phi_z, phi_2pd).unwrap();
                assert!(
                    (from_mode - reference).abs() < 1e-8 * reference.abs().max(1.0),
                    "Ω={o}, φ_h={phi_h}: {from_mode} vs {reference}"
                );
            }
        }

        let spec = FqReadoutSpec {
            chi_z: 1.0,
            kappa: 1.0,
            cooperativity: 5.0,
            r_p: 2.0,
            phi_z: FRAC_PI_2,
        };
        let s = fq_temporal_mode_stats(1.0, &spec, 1.0).unwrap();
        for phi_h in [0.0f64, 0.4, -2.0] {
            let from_mode = 4.0 * (s.mean_x * phi_h.cos() + s.mean_y * phi_h.sin()).abs();
            let reference = fq_signal_separation(1.0, 1.0, 1.0, phi_h, FRAC_PI_2);
            assert!((from_mode - reference).abs() < 1e-12 * reference.max(1.0));
        }
    }

    #[test]
    fn variances_match_integrated_noise() {
        // 4κτ·Var(X̂_φ) must reproduce the closed-form homodyne noise.
        let tau = 2.5;
        for &(o, phi_2pd) in &[(0.15, -FRAC_PI_4), (0.22, 0.4), (0.05, 1.3)] {
            let spec = sc_spec(1.0, o, 0.0, phi_2pd);
            let s = sc_temporal_mode_stats(tau, &spec, 1.0).unwrap();
            for phi in [0.0, FRAC_PI_2, FRAC_PI_4, 0.6, -1.0] {
                let reconstructed = 4.0 * tau * s.variance_at(phi);
                let reference = sc_noise(tau, o, 1.0, phi, phi_2pd).unwrap();
                assert!(
                    (reconstructed - reference).abs() < 1e-8 * reference.max(1.0),
                    "Ω={o}, φ={phi}: {reconstructed} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn squeezed_axis_tracks_the_pump_phase() {
        // Output squeezing degree r_out = 1.5 at φ_2pd = −π/4 squeezes X̂:
        // the normalized squeezed variance falls with the window and stays
        // above the asymptotic floor e^{−2r_out}.
        let omega = omega_2pd_for_r_out(1.5, 1.0).unwrap();
        assert!((omega - 0.15878723809682183).abs() < 1e-16);
        let spec = sc_spec(1.0, omega, -FRAC_PI_2, -FRAC_PI_4);
        let frozen = [
            (0.4, 0.86026444249075852),
            (2.0, 0.51763084313395679),
            (5.0, 0.27833461848281117),
        ];
        let mut previous = f64::INFINITY;
        for (kt, expected) in frozen {
            let s = sc_temporal_mode_stats(kt, &spec, 1.0).unwrap();
            let normalized = 4.0 * s.d_xx;
            assert!(
                (normalized - expected).abs() < 1e-9,
                "κτ={kt}: {normalized} vs {expected}"
            );
            // X̂ is the squeezed principal axis for this drive phase.
            assert!((s.squeezed_variance() - s.d_xx).abs() < 1e-12);
            assert!(s.d_xy.abs() < 1e-9);
            assert!(normalized < previous);
            assert!(normalized > (-2.0f64 * 1.5).exp());
            previous = normalized;
        }
    }

    #[test]
    fn uncertainty_product_respects_the_quantum_floor() {
        for o in [0.0, 0.05, 0.15, 0.22] {
            for kt in [0.3, 1.0, 4.0] {
                for phi_2pd in [0.0, -FRAC_PI_4, 1.0] {
                    let s = sc_temporal_mode_stats(kt, &sc_spec(0.7, o, 0.2, phi_2pd), 1.0)
                        .unwrap();
                    assert!(
                        s.det() >= 1.0 / 16.0 - 1e-9,
                        "det {} at Ω={o}, κτ={kt}, φ={phi_2pd}",
                        s.det()
                    );
                }
            }
        }
        let fq = FqReadoutSpec {
            chi_z: 1.0,
            kappa: 1.0,
            cooperativity: 5.0,
            r_p: 1.5,
            phi_z: FRAC_PI_2,
        };
        let s = fq_temporal_mode_stats(2.0, &fq, 1.0).unwrap();
        // det D = [1 + 8𝒞cosh2r_p + 16𝒞²]/[16(1+4𝒞)²], always ≥ 1/16.
        let expected = (1.0 + 40.0 * (3.0f64).cosh() + 400.0) / (16.0 * 441.0);
        assert!((s.det() - expected).abs() < 1e-15);
        assert!(s.det() >= 1.0 / 16.0);
    }

    #[test]
    fn pump_mode_squeezing_is_window_independent() {
        let spec = FqReadoutSpec {
            chi_z: 1.0,
            kappa: 1.0,
            cooperativity: 5.0,
            r_p: 1.5,
            phi_z: FRAC_PI_2,
        };
        let reference = fq_temporal_mode_stats(0.4, &spec, 1.0).unwrap();
        assert!((4.0 * reference.d_xx - fq_xi2_ss(5.0, 1.5)).abs() < 1e-16);
        assert_eq!(reference.d_xy, 0.0);
        // Rounding in tr/2 − split is a few ulp of the anti-squeezed entry.
        assert!((reference.squeezed_variance() - reference.d_xx).abs() < 1e-14);
        for kt in [2.0, 5.0, 40.0] {
            let s = fq_temporal_mode_stats(kt, &spec, 1.0).unwrap();
            // Covariances carry no τ at all; the match is exact.
            assert_eq!((s.d_xx, s.d_xy, s.d_yy), (reference.d_xx, 0.0, reference.d_yy));
        }
        // Mean displaces along φ_z − π/2 = X̂ and grows with the window.
        assert!(reference.mean_x > 0.0);
        assert!(reference.mean_y.abs() < 1e-15 * reference.mean_x);
    }

    #[test]
    fn wigner_field_is_normalized() {
        let spec = FqReadoutSpec {
            chi_z: 1.0,
            kappa: 1.0,
            cooperativity: 5.0,
            r_p: 2.0,
            phi_z: FRAC_PI_2,
        };
        let stats = fq_temporal_mode_stats(1.0, &spec, 1.0).unwrap();
        let grid = PhaseSpaceGrid::spanning(&[stats], 6.0, 201, 201).unwrap();
        let field = gaussian_wigner(&stats, &grid).unwrap();
        assert!((field.integral() - 1.0).abs() < 1e-3);
        // Peak sits at the mean with height 1/(2π√det).
        let peak = field.values.iter().cloned().fold(0.0, f64::max);
        let expected_peak = 1.0 / (2.0 * PI * stats.det().sqrt());
        assert!((peak - expected_peak).abs() < 1e-4 * expected_peak);
        assert_eq!(field.values.len(), 201 * 201);
    }

    #[test]
    fn wigner_rejects_singular_covariance() {
        let flat = TemporalModeStats {
            mean_x: 0.0,
            mean_y: 0.0,
            d_xx: 0.25,
            d_xy: 0.25,
            d_yy: 0.25,
        };
        let grid = PhaseSpaceGrid::new(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        assert!(matches!(
            gaussian_wigner(&flat, &grid),
            Err(TemporalError::SingularCovariance { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        let spec = sc_spec(1.0, 0.1, 0.0, 0.0);
        assert!(matches!(
            sc_temporal_mode_stats(0.0, &spec, 1.0),
            Err(TemporalError::BadParameter(_))
        ));
        assert!(matches!(
            sc_temporal_mode_stats(1.0, &spec, 0.5),
            Err(TemporalError::BadParameter(_))
        ));
        assert!(matches!(
            sc_temporal_mode_stats(1.0, &sc_spec(1.0, 0.25, 0.0, 0.0), 1.0),
            Err(TemporalError::Unstable { .. })
        ));
        let fq = FqReadoutSpec {
            chi_z: 1.0,
            kappa: 1.0,
            cooperativity: -1.0,
            r_p: 0.5,
            phi_z: 0.0,
        };
        assert!(matches!(
            fq_temporal_mode_stats(1.0, &fq, 1.0),
            Err(TemporalError::BadParameter(_))
        ));
        assert!(PhaseSpaceGrid::new(0.0, 1.0, 0.0, 1.0, 1, 5).is_err());
        assert!(PhaseSpaceGrid::new(1.0, 0.0, 0.0, 1.0, 5, 5).is_err());
        assert!(PhaseSpaceGrid::spanning(&[], 6.0, 5, 5).is_err());
    }
}
