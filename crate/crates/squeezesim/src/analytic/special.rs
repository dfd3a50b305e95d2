//! Special functions for readout statistics: the error function pair and a
//! few numerically guarded elementary helpers.
//!
//! erf/erfc are evaluated by a non-alternating power series for |x| ≤ 2.5
//! and a continued fraction (modified Lentz) beyond, so that deep tails are
//! produced directly — measurement error probabilities are never formed by
//! cancelling 1 − erf(x).

use crate::C64;

const FRAC_2_SQRT_PI: f64 = 1.1283791670955126; // 2/√π
const SQRT_PI: f64 = 1.7724538509055160273; // √π

/// Error function, |erf(x)| ≤ 1, odd in x.
///
/// |x| ≤ 2.5: erf(x) = (2x/√π)·e^{−x²}·Σ_k (2x²)^k/(2k+1)!! (all terms
/// positive). |x| > 2.5: 1 − erfc(x), where erfc is already ≤ 4·10⁻⁴.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 2.5 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

/// Complementary error function erfc(x) = 1 − erf(x), computed directly in
/// the tail (x > 2.5) so small probabilities keep full relative accuracy.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// Gaussian-statistics measurement error ε = ½·erfc(SNR/2).
pub fn measurement_error(snr: f64) -> f64 {
    0.5 * erfc(0.5 * snr)
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = (2/√π)·x·e^{−x²}·Σ_{k≥0} (2x²)^k / (1·3·5···(2k+1))
    let x2 = 2.0 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 0u32;
    while term > 1e-18 * sum && k < 200 {
        k += 1;
        term *= x2 / (2 * k + 1) as f64;
        sum += term;
    }
    FRAC_2_SQRT_PI * x * (-x * x).exp() * sum
}

fn erfc_cf(x: f64) -> f64 {
    // √π·e^{x²}·erfc(x) = 1/(x + 1/(2x + 2/(x + 3/(2x + 4/(x + …))))),
    // partial numerators n, denominators alternating 2x (odd n) and x.
    // Modified Lentz evaluation.
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0f64;
    for n in 1..400u32 {
        let a = n as f64;
        let b = if n % 2 == 1 { 2.0 * x } else { x };
        d = b + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (SQRT_PI * f)
}

/// sinh(z)/z for complex z, continuous through z = 0.
///
/// The squeezing-moment transients contain sinh(2ωt)/ω where ω may be real,
/// imaginary, or zero (critical damping); writing them as 2t·sinhc(2ωt)
/// keeps the ω → 0 limit finite.
pub fn sinhc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        // sinh(z)/z = 1 + z²/6 + z⁴/120 + … (error < 1e−29 at |z| = 1e−4)
        let z2 = z * z;
        C64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// (e^{−x} − 1 + x)/x²: the doubly integrated exponential relaxation,
/// ∫₀^1 (1 − e^{−xs})s⁰… normalized so that the x → 0 limit is 1/2.
///
/// Integrated homodyne records reduce to this shape twice over: the mean
/// response contributes τ²·g(a_±τ) per relaxation rate a_±, and the
/// triangular noise integral ∫₀^τ(τ−u)e^{−ru}du equals τ²·g(rτ).
pub fn integrated_decay(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // Σ_{n≥0} (−x)^n/(n+2)!; 14 terms reach <1e−17 at |x| = 1/2.
        let mut term = 0.5;
        let mut sum = 0.5;
        for n in 1..14 {
            term *= -x / ((n + 2) as f64);
            sum += term;
        }
        sum
    } else {
        ((-x).exp_m1() + x) / (x * x)
    }
}
