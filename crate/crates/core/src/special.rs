//! Special functions: Euler's constant, the unnormalized error integral and a
//! complex reciprocal Gamma function.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
///
/// This is the only place the constant enters; the small-t heat-trace
/// coefficients and the Taylor series `1/Γ(s) = s + γ s² + O(s³)` both read it
/// from here.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// `Erf(s) = ∫₀ˢ e^{-v²} dv`, the error integral *without* the `2/√π`
/// normalization.
///
/// This is the single conversion point to the standard error function:
/// `Erf(s) = (√π / 2) · erf(s)`.
pub fn erf_unnormalized(s: f64) -> f64 {
    0.5 * PI.sqrt() * statrs::function::erf::erf(s)
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `Re z ≥ 1/2` (principal branch of the Lanczos form).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `Γ(z)` for complex `z`; infinite at the non-positive integers.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z) Γ(1 - z) = π / sin(πz)
        let s = (PI * z).sin();
        PI / (s * ln_gamma_right(1.0 - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// `1/Γ(z)`, an entire function: exactly zero at `z = 0, -1, -2, ...`.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        (PI * z).sin() * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// Real `Γ(x)`.
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}
