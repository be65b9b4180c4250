//! Exactly solvable cusp model: the Dirichlet operator `-y²∂²_y` on
//! `[a, ∞)` with measure `y⁻²dy`, compared against the same operator on
//! `[1, ∞)`.
//!
//! Everything here is closed form except [`relative_trace_quadrature`], which
//! integrates the kernel diagonal numerically and serves as an independent
//! check on [`relative_trace_exact`].

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::erf_unnormalized;
use crate::trace_expansion::{ExpansionCoeffs, RelativeTrace};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Hilbert space on which the relative heat operator is traced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceDomain {
    /// `L²([1, ∞), y⁻²dy)`
    FullHalfLine,
    /// `L²([a, ∞), y⁻²dy)`
    Restricted,
}

/// The pair `(Δ_{a,0}, Δ_{1,0})` together with the domain of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCuspPair {
    a: f64,
    domain: TraceDomain,
}

impl ModelCuspPair {
    pub fn new(a: f64, trace_domain: TraceDomain) -> Result<Self> {
        if !(a.is_finite() && a >= 1.0) {
            return domain(format!("cusp start height must be finite and >= 1, got {a}"));
        }
        Ok(Self { a, domain: trace_domain })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn domain(&self) -> TraceDomain {
        self.domain
    }

    /// `a = 1` makes the two operators identical.
    pub fn is_trivial(&self) -> bool {
        self.a == 1.0
    }

    /// The exact relative trace packaged with its small-t coefficients and
    /// large-t decay (kernel offset 0, decay rate 1/4).
    ///
    /// Full half-line: `a10 = -log a / √(4π)`, all other coefficients zero.
    /// Restricted: the trace tends to `-1/4`, so `a2 = -1/4` (zero when `a = 1`).
    pub fn relative_trace(&self) -> RelativeTrace {
        let pair = *self;
        let coeffs = match (self.domain, self.is_trivial()) {
            (_, true) => ExpansionCoeffs::zero(),
            (TraceDomain::FullHalfLine, false) => {
                ExpansionCoeffs { a10: -self.a.ln() / (4.0 * PI).sqrt(), ..ExpansionCoeffs::zero() }
            }
            (TraceDomain::Restricted, false) => ExpansionCoeffs { a2: -0.25, ..ExpansionCoeffs::zero() },
        };
        RelativeTrace::new(move |t| relative_trace_exact(&pair, t).unwrap_or(f64::NAN), coeffs, 0, 0.25)
    }
}

/// Several model cusps acting as a direct sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiCuspModel {
    starts: Vec<f64>,
}

impl MultiCuspModel {
    pub fn new(starts: Vec<f64>) -> Result<Self> {
        if starts.is_empty() {
            return domain("a multi-cusp model needs at least one cusp");
        }
        for &a in &starts {
            ModelCuspPair::new(a, TraceDomain::FullHalfLine)?;
        }
        Ok(Self { starts })
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn cusp_count(&self) -> usize {
        self.starts.len()
    }

    /// Sum of the per-cusp full half-line traces.
    pub fn relative_trace(&self) -> RelativeTrace {
        let model = self.clone();
        let sum_log: f64 = self.starts.iter().map(|a| a.ln()).sum();
        let coeffs = ExpansionCoeffs { a10: -sum_log / (4.0 * PI).sqrt(), ..ExpansionCoeffs::zero() };
        RelativeTrace::new(move |t| multi_cusp_trace(&model, t).unwrap_or(f64::NAN), coeffs, 0, 0.25)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        domain(format!("time must be finite and positive, got {t}"))
    }
}

/// `e^{-t/4} / √(4πt)`
fn heat_prefactor(t: f64) -> f64 {
    (-0.25 * t).exp() / (4.0 * PI * t).sqrt()
}

/// Heat kernel of `Δ_{a,0}` with respect to `y'⁻²dy'`.
///
/// Vanishes identically when either point lies at or below the Dirichlet
/// boundary `y = a`.
pub fn model_heat_kernel(a: f64, y: f64, y_prime: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(a.is_finite() && a >= 1.0) {
        return domain(format!("cusp start height must be finite and >= 1, got {a}"));
    }
    if !(y > 0.0 && y_prime > 0.0 && y.is_finite() && y_prime.is_finite()) {
        return domain(format!("heights must be positive and finite, got y = {y}, y' = {y_prime}"));
    }
    if y <= a || y_prime <= a {
        return Ok(0.0);
    }
    let direct = (y / y_prime).ln();
    let image = (y * y_prime).ln() - 2.0 * a.ln();
    let bracket = (-direct * direct / (4.0 * t)).exp() - (-image * image / (4.0 * t)).exp();
    Ok(heat_prefactor(t) * (y * y_prime).sqrt() * bracket)
}

/// Closed-form relative heat trace of the model pair.
///
/// * full half-line: `-(e^{-t/4}/√(4πt)) · log a`
/// * restricted: `-(e^{-t/4}/√(4π)) · Erf(log a / √t)` with the unnormalized
///   `Erf` of [`erf_unnormalized`].
pub fn relative_trace_exact(pair: &ModelCuspPair, t: f64) -> Result<f64> {
    check_time(t)?;
    if pair.is_trivial() {
        return Ok(0.0);
    }
    let log_a = pair.a.ln();
    Ok(match pair.domain {
        TraceDomain::FullHalfLine => -heat_prefactor(t) * log_a,
        TraceDomain::Restricted => -(-0.25 * t).exp() / (4.0 * PI).sqrt() * erf_unnormalized(log_a / t.sqrt()),
    })
}

/// Quadrature estimate of the relative trace: `∫ (p_a − p_1)(y, y, t) y⁻²dy`
/// over the declared domain.
///
/// In `u = log y` the diagonal of either kernel times `y⁻²dy` becomes
/// `e^{-t/4}/√(4πt) · (1 − e^{-(u−u₀)²/t}) du`, so the integrand is a
/// difference of Gaussians. The upper limit is
/// `U = log a + √(t · ln(100/tol))`, where the slower of the two Gaussians has
/// fallen to `tol/100` of its peak.
pub fn relative_trace_quadrature(pair: &ModelCuspPair, t: f64, tol: f64) -> Result<f64> {
    check_time(t)?;
    if !(tol > 0.0 && tol < 1.0) {
        return domain(format!("tolerance must lie in (0, 1), got {tol}"));
    }
    if pair.is_trivial() {
        return Ok(0.0);
    }
    let log_a = pair.a.ln();
    let width = (t * (100.0 / tol).ln()).sqrt();
    let diagonal_difference = move |u: f64| -> f64 {
        if u <= log_a {
            // p_a vanishes below the boundary; only -p_1 remains
            (-u * u / t).exp_m1()
        } else {
            let v = u - log_a;
            (-u * u / t).exp() - (-v * v / t).exp()
        }
    };
    let lower = match pair.domain {
        TraceDomain::FullHalfLine => 0.0,
        TraceDomain::Restricted => log_a,
    };
    let mut breaks = vec![lower];
    if lower < log_a {
        breaks.push(log_a);
    }
    // resolve the Gaussian bump just above the boundary; the last break is U
    let step = width / 4.0;
    for k in 1..=4 {
        breaks.push(log_a + step * k as f64);
    }
    let scale = log_a.min(t.sqrt()).max(f64::MIN_POSITIVE);
    let opts = QuadOptions { abs_tol: 1e-3 * tol * scale, rel_tol: tol / 20.0, max_panels: 2000 };
    let est = integrate_with_breaks(diagonal_difference, &breaks, opts)?;
    if !est.value.is_finite() {
        return Err(Error::Convergence { estimate: f64::INFINITY, target: tol, panels: est.panels });
    }
    Ok(heat_prefactor(t) * est.value)
}

/// Relative trace of a direct sum of full half-line model pairs.
pub fn multi_cusp_trace(model: &MultiCuspModel, t: f64) -> Result<f64> {
    check_time(t)?;
    let mut total = 0.0;
    for &a in &model.starts {
        total += relative_trace_exact(&ModelCuspPair::new(a, TraceDomain::FullHalfLine)?, t)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn kernel_vanishes_on_the_boundary() {
        assert_eq!(model_heat_kernel(2.0, 2.0, 3.0, 0.7).unwrap(), 0.0);
        assert_eq!(model_heat_kernel(2.0, 1.5, 3.0, 0.7).unwrap(), 0.0);
        assert_eq!(model_heat_kernel(2.0, 3.0, 2.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn kernel_is_symmetric() {
        let k1 = model_heat_kernel(1.5, 2.5, 4.0, 0.3).unwrap();
        let k2 = model_heat_kernel(1.5, 4.0, 2.5, 0.3).unwrap();
        assert_relative_eq!(k1, k2, max_relative = 1e-15);
    }

    #[test]
    fn kernel_value_at_a_one() {
        // (e^{-1/4}/√(4π)) · 2 · [1 − e^{−(log 4)²/4}], factors evaluated separately
        let pref = (-0.25f64).exp() / (4.0 * PI).sqrt();
        let bracket = 1.0 - (-(4.0f64.ln()).powi(2) / 4.0).exp();
        let expected = pref * 2.0 * bracket;
        assert_relative_eq!(model_heat_kernel(1.0, 2.0, 2.0, 1.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn kernel_rejects_bad_arguments() {
        assert!(model_heat_kernel(2.0, 3.0, 3.0, 0.0).is_err());
        assert!(model_heat_kernel(2.0, -3.0, 3.0, 1.0).is_err());
        assert!(model_heat_kernel(0.5, 3.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn exact_trace_at_a_equals_e() {
        let pair = ModelCuspPair::new(E, TraceDomain::FullHalfLine).unwrap();
        let v = relative_trace_exact(&pair, 1.0).unwrap();
        assert_relative_eq!(v, -(-0.25f64).exp() / (4.0 * PI).sqrt(), max_relative = 1e-15);
        assert!((v + 0.21969).abs() < 1e-5);
    }

    #[test]
    fn trivial_pair_is_zero() {
        for domain in [TraceDomain::FullHalfLine, TraceDomain::Restricted] {
            let pair = ModelCuspPair::new(1.0, domain).unwrap();
            for t in [1e-3, 0.5, 7.0] {
                assert_eq!(relative_trace_exact(&pair, t).unwrap(), 0.0);
                assert_eq!(relative_trace_quadrature(&pair, t, 1e-10).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn restricted_small_time_limit() {
        let pair = ModelCuspPair::new(4.0, TraceDomain::Restricted).unwrap();
        for t in [1e-6, 1e-4, 1e-2] {
            let v = relative_trace_exact(&pair, t).unwrap();
            assert!((v + 0.25).abs() <= t.sqrt(), "t = {t}: {v}");
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let full = ModelCuspPair::new(2.0, TraceDomain::FullHalfLine).unwrap();
        let q = relative_trace_quadrature(&full, 0.5, 1e-8).unwrap();
        let closed = -(-0.125f64).exp() / (2.0 * PI).sqrt() * 2.0f64.ln();
        assert_relative_eq!(q, closed, max_relative = 1e-8);

        let restricted = ModelCuspPair::new(3.0, TraceDomain::Restricted).unwrap();
        let q = relative_trace_quadrature(&restricted, 2.0, 1e-8).unwrap();
        let closed = relative_trace_exact(&restricted, 2.0).unwrap();
        assert_relative_eq!(q, closed, max_relative = 1e-8);
    }

    #[test]
    fn quadrature_rejects_bad_tolerance() {
        let pair = ModelCuspPair::new(2.0, TraceDomain::FullHalfLine).unwrap();
        assert!(matches!(relative_trace_quadrature(&pair, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(relative_trace_quadrature(&pair, -1.0, 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn multi_cusp_is_additive() {
        let model = MultiCuspModel::new(vec![E, E]).unwrap();
        let v = multi_cusp_trace(&model, 1.0).unwrap();
        assert_relative_eq!(v, -2.0 * (-0.25f64).exp() / (4.0 * PI).sqrt(), max_relative = 1e-15);

        let trivial = MultiCuspModel::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(multi_cusp_trace(&trivial, 0.3).unwrap(), 0.0);

        let single = MultiCuspModel::new(vec![2.0]).unwrap();
        let pair = ModelCuspPair::new(2.0, TraceDomain::FullHalfLine).unwrap();
        for t in [0.01, 0.3, 4.0] {
            assert_eq!(multi_cusp_trace(&single, t).unwrap(), relative_trace_exact(&pair, t).unwrap());
        }
    }

    #[test]
    fn empty_multi_cusp_is_rejected() {
        assert!(matches!(MultiCuspModel::new(vec![]), Err(Error::Domain(_))));
    }
}
