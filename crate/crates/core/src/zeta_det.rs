//! Relative zeta function, its derivative at `s = 0` and the relative
//! determinant.
//!
//! For `Re s > 1` the zeta function is the Mellin transform
//! `(1/Γ(s)) ∫₀^∞ t^{s−1} (R(t) − h) dt`. The continuation splits the integral
//! at `τ` (default 1): below `τ` the expansion terms are integrated in closed
//! form and only the remainder `ϑ(t) = O(√t)` is integrated numerically.

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::special::{recip_gamma, EULER_GAMMA};
use crate::trace_expansion::{ExpansionCoeffs, RelativeTrace};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug)]
pub struct ZetaOptions {
    /// Split point `τ` of the Mellin integral.
    pub split: f64,
    pub quad: QuadOptions,
    /// Rounding budget for evaluating `ϑ` near `t = 0`; sets the lower cutoff
    /// below which `ϑ` is replaced by its small-t model.
    pub remainder_noise: f64,
    /// Upper bound on `|ϑ(t)|/√t` on the probe grid.
    pub remainder_bound: f64,
    /// Finite-difference step in `s` (Richardson-extrapolated).
    pub fd_step: f64,
    /// Required agreement of the two `ζ′(0)` evaluations.
    pub agreement_tol: f64,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        Self {
            split: 1.0,
            quad: QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_panels: 4000 },
            remainder_noise: 1e-10,
            remainder_bound: 1e2,
            fd_step: 1e-2,
            agreement_tol: 1e-6,
        }
    }
}

/// Residue terms of the continuation at the split point `τ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePart {
    /// `a0/(s − 1)`
    pub simple_at_one: f64,
    /// `a10/(s − 1/2)`
    pub simple_at_half: f64,
    /// `−a11/(s − 1/2)²`
    pub double_at_half: f64,
    /// `(a2 − h)/s`
    pub simple_at_zero: f64,
}

impl PolePart {
    fn new(c: &ExpansionCoeffs, h: f64) -> Self {
        Self { simple_at_one: c.a0, simple_at_half: c.a10, double_at_half: -c.a11, simple_at_zero: c.a2 - h }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaDiagnostics {
    pub zeta_at_zero: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub method_gap: f64,
    /// Quadrature error estimate of `∫₀^τ t⁻¹ ϑ(t) dt`.
    pub remainder_integral_error: f64,
    /// Quadrature error estimate of `∫_τ^∞ t⁻¹ (R(t) − h) dt`.
    pub tail_integral_error: f64,
    /// Lower cutoff below which `ϑ(t)` is replaced by its tail model.
    pub remainder_cutoff: f64,
    pub remainder_max_ratio: f64,
    pub split: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaResult {
    #[serde(rename = "zeta_prime_0")]
    pub zeta_prime_at_zero: f64,
    pub determinant: f64,
    pub pole_part: PolePart,
    pub diagnostics: ZetaDiagnostics,
}

/// Lower cutoff for integrating `ϑ`: `ϑ` is formed by cancelling terms as large
/// as `a0/t`, so its rounding error grows like `ε·|a0|/t`.
fn remainder_cutoff(c: &ExpansionCoeffs, h: f64, opts: &ZetaOptions) -> f64 {
    let eps = f64::EPSILON;
    let by_a0 = eps * c.a0.abs() / opts.remainder_noise;
    let by_half = (eps * (c.a10.abs() + 35.0 * c.a11.abs()) / opts.remainder_noise).powi(2);
    let by_const = eps * (c.a2.abs() + h.abs());
    1e-14f64.max(by_a0).max(by_half).max(by_const).min(1e-4 * opts.split)
}

/// Check `|ϑ(t)| ≤ bound·√t` on a geometric probe grid and return the largest ratio.
fn check_remainder(trace: &RelativeTrace, cutoff: f64, opts: &ZetaOptions) -> Result<f64> {
    let lo = (cutoff * 10.0).max(1e-8).min(opts.split * 1e-2);
    let n = 25;
    let mut worst = (0.0f64, lo);
    for i in 0..n {
        let t = lo * (opts.split / lo).powf(i as f64 / (n - 1) as f64);
        let ratio = trace.remainder(t).abs() / t.sqrt();
        if !ratio.is_finite() {
            return Err(Error::ModelMismatch { t, ratio, bound: opts.remainder_bound });
        }
        if ratio > worst.0 {
            worst = (ratio, t);
        }
    }
    if worst.0 > opts.remainder_bound {
        return Err(Error::ModelMismatch { t: worst.1, ratio: worst.0, bound: opts.remainder_bound });
    }
    Ok(worst.0)
}

/// Upper truncation `T` of `∫_τ^∞ t^{σ−1} |R − h|` using the decay model
/// `e^{−c t}`: past `T` the integrand is below `1e-18` of its value at the peak.
fn tail_limit(trace: &RelativeTrace, sigma: f64, split: f64) -> Result<(f64, f64)> {
    let c = trace.decay_rate;
    if !(c > 0.0 && c.is_finite()) {
        let h = trace.kernel_offset as f64;
        let far = [10.0, 100.0, 1000.0].iter().any(|&t| trace.value(split * t) != h);
        if far {
            return Err(Error::Model(format!("non-convergent tail: decay rate {c} with R ≠ h")));
        }
        return Ok((split, split));
    }
    let peak = ((sigma - 1.0) / c).max(split);
    let mut upper = peak + 42.0 / c;
    for _ in 0..8 {
        upper = peak + (42.0 + (sigma - 1.0).max(0.0) * (upper / peak).ln()) / c;
    }
    Ok((peak, upper))
}

fn check_s(s: Complex64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return domain(format!("s must be finite, got {s}"));
    }
    Ok(())
}

/// `∫_τ^∞ t^{s−1} (R(t) − h) dt` with quadrature diagnostics.
fn upper_integral(trace: &RelativeTrace, s: Complex64, opts: &ZetaOptions) -> Result<(Complex64, f64)> {
    let tau = opts.split;
    let (peak, upper) = tail_limit(trace, s.re, tau)?;
    if upper <= tau {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let h = trace.kernel_offset as f64;
    let f = |t: f64| -> Complex64 {
        let d = trace.value(t) - h;
        ((s - 1.0) * t.ln()).exp() * d
    };
    let mut breaks = vec![tau];
    if peak > tau && peak < upper {
        breaks.push(peak);
    }
    breaks.push(upper);
    let est = integrate_with_breaks(f, &breaks, opts.quad)?;
    Ok((est.value, est.error))
}

/// `∫₀^τ t^{s−1} ϑ(t) dt` in the variable `u = −log t`.
///
/// Below the cutoff `t_c`, `ϑ(t)` is replaced by `√t (b + c log t) + d t`
/// matched at three points and integrated in closed form.
fn remainder_integral(
    trace: &RelativeTrace,
    s: Complex64,
    cutoff: f64,
    opts: &ZetaOptions,
) -> Result<(Complex64, f64)> {
    if s.re <= -0.5 {
        return domain(format!("the remainder integral needs Re s > -1/2, got {s}"));
    }
    let tau = opts.split;
    let f = |u: f64| -> Complex64 {
        let t = (-u).exp();
        (-s * u).exp() * trace.remainder(t)
    };
    let u0 = -tau.ln();
    let u1 = -cutoff.ln();
    let quad = QuadOptions { abs_tol: opts.quad.abs_tol.max(10.0 * opts.remainder_noise), ..opts.quad };
    let est = integrate(f, u0, u1, quad)?;

    // ϑ/√t ≈ b + c log t + d √t through t_c, 4t_c, 16t_c
    let ts = [cutoff, 4.0 * cutoff, 16.0 * cutoff];
    let m = Matrix3::from_fn(|i, j| match j {
        0 => 1.0,
        1 => ts[i].ln(),
        _ => ts[i].sqrt(),
    });
    let q = Vector3::from_fn(|i, _| trace.remainder(ts[i]) / ts[i].sqrt());
    let coef = m
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::Conditioning { condition: f64::INFINITY, reason: "singular tail model".into() })?;
    let (b, c, d) = (coef[0], coef[1], coef[2]);
    let l1 = cutoff.ln();
    let sh = s + 0.5;
    let below = (sh * l1).exp() * (b / sh + c * (l1 / sh - 1.0 / (sh * sh))) + d * ((s + 1.0) * l1).exp() / (s + 1.0);
    Ok((est.value + below, est.error))
}

/// Closed-form `∫₀^τ t^{s−1}[a0/t + (a10 + a11 log t)/√t] dt`, without the
/// constant term.
fn pole_terms(c: &ExpansionCoeffs, s: Complex64, tau: f64) -> Complex64 {
    let lt = tau.ln();
    let p1 = ((s - 1.0) * lt).exp();
    let ph = ((s - 0.5) * lt).exp();
    let sh = s - 0.5;
    c.a0 * p1 / (s - 1.0) + c.a10 * ph / sh + c.a11 * (ph * lt / sh - ph / (sh * sh))
}

/// Direct Mellin transform, valid for `Re s > 1`.
pub fn relative_zeta(trace: &RelativeTrace, s: Complex64, opts: &ZetaOptions) -> Result<Complex64> {
    check_s(s)?;
    if s.re <= 1.0 {
        return domain(format!("the direct integral needs Re s > 1, got {s}"));
    }
    let h = trace.kernel_offset as f64;
    let tau = opts.split;
    // below t_min the integrand is replaced by the expansion, integrated exactly
    let t_min = 1e-12 * tau;
    let lower = |u: f64| -> Complex64 {
        let t = (-u).exp();
        (-s * u).exp() * (trace.value(t) - h)
    };
    let near = integrate(lower, -tau.ln(), -t_min.ln(), opts.quad)?;
    let c = &trace.coeffs;
    let below = pole_terms(c, s, t_min) + (c.a2 - h) * (s * t_min.ln()).exp() / s;
    let (far, _) = upper_integral(trace, s, opts)?;
    Ok(recip_gamma(s) * (near.value + below + far))
}

/// Meromorphic continuation of the relative zeta function to
/// `Re s > −1/2`, excluding the poles at `s = 1` and `s = 1/2`.
pub fn relative_zeta_continued(trace: &RelativeTrace, s: Complex64, opts: &ZetaOptions) -> Result<Complex64> {
    check_s(s)?;
    let c = trace.coeffs;
    let h = trace.kernel_offset as f64;
    if c.a0 != 0.0 && (s - 1.0).norm() < 1e-10 {
        return domain("s = 1 is a pole");
    }
    if (c.a10 != 0.0 || c.a11 != 0.0) && (s - 0.5).norm() < 1e-10 {
        return domain("s = 1/2 is a pole");
    }
    let cutoff = remainder_cutoff(&c, h, opts);
    check_remainder(trace, cutoff, opts)?;
    Ok(continued_unchecked(trace, s, cutoff, opts)?.0)
}

fn continued_unchecked(
    trace: &RelativeTrace,
    s: Complex64,
    cutoff: f64,
    opts: &ZetaOptions,
) -> Result<(Complex64, f64, f64)> {
    let c = trace.coeffs;
    let h = trace.kernel_offset as f64;
    let tau = opts.split;
    let (theta, theta_err) = remainder_integral(trace, s, cutoff, opts)?;
    let (far, far_err) = upper_integral(trace, s, opts)?;
    // (a2 − h) τ^s / (s Γ(s)) = (a2 − h) τ^s / Γ(s + 1), finite at s = 0
    let constant = (c.a2 - h) * (s * tau.ln()).exp() * recip_gamma(s + 1.0);
    let value = recip_gamma(s) * (pole_terms(&c, s, tau) + theta + far) + constant;
    Ok((value, theta_err, far_err))
}

/// `ζ′(0)` by analytic differentiation of the continuation, cross-checked by
/// Richardson-extrapolated central differences.
///
/// With `1/Γ(s) = s + γs² + O(s³)` and split point `τ`:
///
/// `ζ′(0) = −a0/τ − 2a10/√τ − a11(2 log τ + 4)/√τ + (a2 − h)(γ + log τ)
///          + ∫₀^τ t⁻¹ϑ(t) dt + ∫_τ^∞ t⁻¹(R(t) − h) dt`
pub fn zeta_prime_zero(trace: &RelativeTrace, opts: &ZetaOptions) -> Result<ZetaResult> {
    let c = trace.coeffs;
    if !c.is_finite() {
        return Err(Error::Model("expansion coefficients must be finite".into()));
    }
    if !(opts.split > 0.0 && opts.split.is_finite()) {
        return domain("split point must be positive");
    }
    let h = trace.kernel_offset as f64;
    let tau = opts.split;
    let cutoff = remainder_cutoff(&c, h, opts);
    let max_ratio = check_remainder(trace, cutoff, opts)?;

    let zero = Complex64::new(0.0, 0.0);
    let (theta, theta_err) = remainder_integral(trace, zero, cutoff, opts)?;
    let (far, far_err) = upper_integral(trace, zero, opts)?;
    let lt = tau.ln();
    let rt = tau.sqrt();
    let analytic = -c.a0 / tau - 2.0 * c.a10 / rt - c.a11 * (2.0 * lt + 4.0) / rt
        + (c.a2 - h) * (EULER_GAMMA + lt)
        + theta.re
        + far.re;

    let step = opts.fd_step;
    let eval = |s: f64| -> Result<f64> { Ok(continued_unchecked(trace, Complex64::new(s, 0.0), cutoff, opts)?.0.re) };
    let d1 = (eval(step)? - eval(-step)?) / (2.0 * step);
    let d2 = (eval(0.5 * step)? - eval(-0.5 * step)?) / step;
    let finite_difference = (4.0 * d2 - d1) / 3.0;
    let zeta_at_zero = eval(0.0)?;

    let gap = (analytic - finite_difference).abs();
    if !(gap <= opts.agreement_tol) {
        return Err(Error::Inconsistency { analytic, finite_difference });
    }
    Ok(ZetaResult {
        zeta_prime_at_zero: analytic,
        determinant: (-analytic).exp(),
        pole_part: PolePart::new(&c, h),
        diagnostics: ZetaDiagnostics {
            zeta_at_zero,
            analytic,
            finite_difference,
            method_gap: gap,
            remainder_integral_error: theta_err,
            tail_integral_error: far_err,
            remainder_cutoff: cutoff,
            remainder_max_ratio: max_ratio,
            split: tau,
        },
    })
}

/// `det = exp(−ζ′(0))`.
pub fn relative_determinant(trace: &RelativeTrace, opts: &ZetaOptions) -> Result<f64> {
    Ok(zeta_prime_zero(trace, opts)?.determinant)
}
