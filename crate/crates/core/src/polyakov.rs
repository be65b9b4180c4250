//! Conformal variation of the relative determinant and the uniformization
//! functional.
//!
//! For `h = e^{2φ}g`:
//!
//! `F(g, φ) = log det(Δ_h) − log det(Δ_g)
//!          = −(1/12π)∫|∇φ|² − (1/6π)∫K_g φ + log(A_h/A_g)`
//!
//! `Φ(φ) = ½∫|∇φ|² + ∫K_g φ − πχ log ∫e^{2φ}`,
//!
//! all integrals against `dA_g`. They are related by
//! `Φ(φ) − Φ(0) = −6π F(g, φ) + π(6 − χ) log(A_h/A_g)`.

use crate::error::{Error, Result};
use crate::output::float17;
use crate::quadrature::CompensatedSum;
use crate::surface::{conformal_transform, ConformalFactor, DiscreteSurface};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyakovDelta {
    /// `−(1/12π)∫|∇_gφ|² dA_g`
    pub energy_term: f64,
    /// `−(1/6π)∫K_g φ dA_g`
    pub curvature_term: f64,
    /// `log(A_h/A_g)`
    pub area_term: f64,
    pub total: f64,
    /// Bound on the part of `∫K_g φ` lost above the cusp truncation, from the
    /// declared decay class and `|K| ≤ 1` there.
    pub truncation_tail: f64,
}

fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::<f64>::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

fn check_len(surf: &DiscreteSurface, v: &[f64]) -> Result<()> {
    if v.len() != surf.sites() {
        return Err(Error::Contract(format!("{} values for {} sites", v.len(), surf.sites())));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Contract(format!("non-finite value at site {i}")));
    }
    Ok(())
}

/// `Σ w e^{2φ}`
fn conformal_area(surf: &DiscreteSurface, phi: &[f64]) -> f64 {
    sum(surf.weights().iter().zip(phi).map(|(w, p)| w * (2.0 * p).exp()))
}

/// `Σ w K φ`
fn curvature_pairing(surf: &DiscreteSurface, phi: &[f64]) -> f64 {
    sum(surf.weights().iter().zip(surf.curvature()).zip(phi).map(|((w, k), p)| w * k * p))
}

fn truncation_tail(surf: &DiscreteSurface, phi: &ConformalFactor) -> f64 {
    let k = phi.decay_order;
    surf.cusps().iter().map(|c| c.width * phi.decay_bound * c.top().powf(-(k + 1.0)) / (k + 1.0)).sum()
}

pub fn polyakov_delta(surf: &DiscreteSurface, phi: &ConformalFactor) -> Result<PolyakovDelta> {
    phi.check(surf)?;
    let p = &phi.values;
    let energy_term = -surf.laplacian().energy(p) / (12.0 * PI);
    let curvature_term = -curvature_pairing(surf, p) / (6.0 * PI);
    let area_term = (conformal_area(surf, p) / surf.area()).ln();
    Ok(PolyakovDelta {
        energy_term,
        curvature_term,
        area_term,
        total: energy_term + curvature_term + area_term,
        truncation_tail: truncation_tail(surf, phi) / (6.0 * PI),
    })
}

/// `d/du F(g, φ + uψ)` at `u = 0`:
/// `−(1/6π)∫ψ(Δ_gφ + K_g)dA_g + (2/A_h)∫ψ e^{2φ}dA_g`.
pub fn polyakov_directional(surf: &DiscreteSurface, phi: &ConformalFactor, psi: &ConformalFactor) -> Result<f64> {
    phi.check(surf)?;
    psi.check(surf)?;
    let (p, q) = (&phi.values, &psi.values);
    let sp = surf.laplacian().apply(p);
    let w = surf.weights();
    let k = surf.curvature();
    let first = sum((0..surf.sites()).map(|i| q[i] * (sp[i] + w[i] * k[i])));
    let second = sum((0..surf.sites()).map(|i| w[i] * (2.0 * p[i]).exp() * q[i]));
    Ok(-first / (6.0 * PI) + 2.0 * second / conformal_area(surf, p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleCheck {
    /// `F(g, φ + ψ)`
    pub combined: f64,
    /// `F(g, φ)`
    pub first: f64,
    /// `F(e^{2φ}g, ψ)`
    pub second: f64,
    pub residual: f64,
    /// Size of the largest term, for judging the residual against rounding.
    pub scale: f64,
}

/// `F(g, φ + ψ) − F(g, φ) − F(e^{2φ}g, ψ)`.
pub fn cocycle_check(surf: &DiscreteSurface, phi: &ConformalFactor, psi: &ConformalFactor) -> Result<CocycleCheck> {
    phi.check(surf)?;
    psi.check(surf)?;
    let both: Vec<f64> = phi.values.iter().zip(&psi.values).map(|(a, b)| a + b).collect();
    let both = ConformalFactor::new(both, phi.decay_order.min(psi.decay_order), f64::INFINITY);
    let h = conformal_transform(surf, phi)?;
    let combined = polyakov_delta(surf, &both)?;
    let first = polyakov_delta(surf, phi)?;
    let second = polyakov_delta(&h, &ConformalFactor { decay_bound: f64::INFINITY, ..psi.clone() })?;
    let terms = [combined, first, second];
    let scale =
        terms.iter().flat_map(|d| [d.energy_term.abs(), d.curvature_term.abs(), d.area_term.abs()]).fold(0.0, f64::max);
    Ok(CocycleCheck {
        combined: combined.total,
        first: first.total,
        second: second.total,
        residual: combined.total - first.total - second.total,
        scale,
    })
}

/// `Φ(φ) = ½⟨φ, Sφ⟩ + Σ w K φ − πχ log Σ w e^{2φ}`.
pub fn ops_functional(surf: &DiscreteSurface, phi: &[f64]) -> Result<f64> {
    check_len(surf, phi)?;
    let chi = surf.euler_char() as f64;
    Ok(0.5 * surf.laplacian().energy(phi) + curvature_pairing(surf, phi) - PI * chi * conformal_area(surf, phi).ln())
}

/// Euclidean gradient `g_i = (Sφ)_i + w_i K_i − (2πχ/A_h) w_i e^{2φ_i}`.
fn euclidean_gradient(surf: &DiscreteSurface, phi: &[f64]) -> (Vec<f64>, f64) {
    let chi = surf.euler_char() as f64;
    let area = conformal_area(surf, phi);
    let mut g = surf.laplacian().apply(phi);
    for (i, gi) in g.iter_mut().enumerate() {
        let w = surf.weights()[i];
        *gi += w * surf.curvature()[i] - 2.0 * PI * chi / area * w * (2.0 * phi[i]).exp();
    }
    (g, area)
}

/// Gradient field `r = Δ_gφ + K_g − (2πχ/A_h) e^{2φ}`, the representative of
/// `dΦ` in `L²(dA_g)`. Equivalently `r = e^{2φ}(K_h − 2πχ/A_h)`.
pub fn ops_gradient(surf: &DiscreteSurface, phi: &[f64]) -> Result<Vec<f64>> {
    check_len(surf, phi)?;
    let (mut g, _) = euclidean_gradient(surf, phi);
    for (gi, w) in g.iter_mut().zip(surf.weights()) {
        *gi /= w;
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStats {
    /// Area-weighted mean of `K_h` over interior sites.
    pub mean: f64,
    pub stddev: f64,
    pub relative_stddev: f64,
    /// `2πχ/A_h`
    pub target: f64,
    pub max_interior_deviation: f64,
    pub area: f64,
    pub interior_sites: usize,
}

/// Statistics of `K_h` for `h = e^{2φ}g`; cusp truncation rows are excluded
/// from the interior.
pub fn curvature_constancy(surf: &DiscreteSurface, phi: &[f64]) -> Result<CurvatureStats> {
    check_len(surf, phi)?;
    let h = conformal_transform(surf, &ConformalFactor::new(phi.to_vec(), 0.0, f64::INFINITY))?;
    let mask = surf.truncation_mask();
    let area = h.area();
    let target = 2.0 * PI * surf.euler_char() as f64 / area;
    let interior: Vec<usize> = (0..surf.sites()).filter(|&i| !mask[i]).collect();
    let w = h.weights();
    let k = h.curvature();
    let wsum = sum(interior.iter().map(|&i| w[i]));
    let mean = sum(interior.iter().map(|&i| w[i] * k[i])) / wsum;
    let var = sum(interior.iter().map(|&i| w[i] * (k[i] - mean).powi(2))) / wsum;
    let max_dev = interior.iter().map(|&i| (k[i] - target).abs()).fold(0.0, f64::max);
    let stddev = var.sqrt();
    Ok(CurvatureStats {
        mean,
        stddev,
        relative_stddev: stddev / mean.abs(),
        target,
        max_interior_deviation: max_dev,
        area,
        interior_sites: interior.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Steepest descent in `L²(dA_g)`: `d = −r`, Barzilai–Borwein trial steps.
    Gradient,
    /// Descent along `−P⁻¹g` with `P = S + (4π|χ|/A_h) diag(w e^{2φ})`, the
    /// Hessian without its rank-one part.
    Preconditioned,
}

#[derive(Clone, Copy, Debug)]
pub struct MinimizeOptions {
    pub step_rule: StepRule,
    pub max_iter: usize,
    /// Stop when `max |r_i|` over free sites falls below this.
    pub grad_tol: f64,
    /// Shift `φ` by a constant at the end so that `A_h = −2πχ`.
    pub area_normalization: bool,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Relative residual for the conjugate-gradient solve.
    pub cg_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            step_rule: StepRule::Preconditioned,
            max_iter: 500,
            grad_tol: 1e-8,
            area_normalization: false,
            armijo: 1e-4,
            max_backtracks: 60,
            cg_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub functional: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub minimizer: ConformalFactor,
    pub curvature_mean: f64,
    pub curvature_stddev: f64,
    pub curvature_relative_stddev: f64,
    pub max_interior_deviation: f64,
    /// `2πχ/A_h`
    pub target: f64,
    pub area: f64,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
    pub functional: f64,
    pub step_rule: StepRule,
    /// Constant added at the end for area normalization (0 if not requested).
    pub area_shift: f64,
    /// Per cusp: `k` in `|φ| ~ y^{−k}` fitted on the upper rows before the
    /// area shift; `None` when there are too few non-zero rows.
    pub decay_exponents: Vec<Option<f64>>,
    /// One row per iterate: the value and gradient at it and the step taken.
    #[serde(skip)]
    pub history: Vec<IterationRecord>,
}

impl ExtremalReport {
    /// `iteration,functional,grad_norm,step` rows.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,functional,grad_norm,step\n");
        for r in &self.history {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration,
                float17(r.functional),
                float17(r.grad_norm),
                float17(r.step)
            ));
        }
        out
    }
}

/// `Φ(φ + αd) − Φ(φ)` without cancellation against `Φ` itself.
fn functional_change(surf: &DiscreteSurface, phi: &[f64], sphi: &[f64], area: f64, d: &[f64], alpha: f64) -> f64 {
    let chi = surf.euler_char() as f64;
    let w = surf.weights();
    let k = surf.curvature();
    let lin = sum((0..phi.len()).map(|i| d[i] * (sphi[i] + w[i] * k[i])));
    let quad = surf.laplacian().energy(d);
    let grow = sum((0..phi.len()).map(|i| w[i] * (2.0 * phi[i]).exp() * (2.0 * alpha * d[i]).exp_m1()));
    alpha * lin + 0.5 * alpha * alpha * quad - PI * chi * (grow / area).ln_1p()
}

/// Preconditioned conjugate gradients for `P x = b` on the free sites.
fn solve_preconditioned(surf: &DiscreteSurface, diag_shift: &[f64], free: &[bool], b: &[f64], tol: f64) -> Vec<f64> {
    let n = b.len();
    let lap = surf.laplacian();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = lap.apply(v);
        for i in 0..n {
            out[i] = if free[i] { out[i] + diag_shift[i] * v[i] } else { 0.0 };
        }
        out
    };
    let jacobi: Vec<f64> =
        (0..n).map(|i| if free[i] { 1.0 / (lap.diagonal(i) + diag_shift[i]) } else { 0.0 }).collect();
    let dot = |a: &[f64], b: &[f64]| sum(a.iter().zip(b).map(|(x, y)| x * y));

    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { b[i] } else { 0.0 }).collect();
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(&jacobi).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..(4 * n).max(100) {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * jacobi[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

fn fit_decay_exponents(surf: &DiscreteSurface, phi: &[f64]) -> Vec<Option<f64>> {
    surf.cusps()
        .iter()
        .map(|cusp| {
            let mut rows: Vec<(f64, f64, usize)> = Vec::new();
            for (&s, &y) in cusp.sites.iter().zip(&cusp.y) {
                match rows.iter_mut().find(|r| (r.0 - y).abs() <= 1e-12 * y) {
                    Some(r) => {
                        r.1 += phi[s].abs();
                        r.2 += 1;
                    }
                    None => rows.push((y, phi[s].abs(), 1)),
                }
            }
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (lo, hi) = (rows.first()?.0.ln(), rows.last()?.0.ln());
            let mid = 0.5 * (lo + hi);
            let pts: Vec<(f64, f64)> = rows[..rows.len() - 1]
                .iter()
                .filter(|r| r.0.ln() >= mid && r.1 > 0.0)
                .map(|r| (r.0.ln(), (r.1 / r.2 as f64).ln()))
                .collect();
            if pts.len() < 3 {
                return None;
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(-sxy / sxx)
        })
        .collect()
}

/// Descend `Φ` from `φ0` with Armijo backtracking. Sites on the cusp
/// truncation rows keep their starting values.
pub fn minimize_ops(surf: &DiscreteSurface, phi0: &ConformalFactor, opts: &MinimizeOptions) -> Result<ExtremalReport> {
    let chi = surf.euler_char();
    if chi >= 0 {
        return Err(Error::Contract(format!("minimization needs χ < 0, got χ = {chi}")));
    }
    if !surf.is_complete() {
        return Err(Error::Contract("minimization needs a complete surface".into()));
    }
    phi0.check(surf)?;
    if !(opts.grad_tol > 0.0 && opts.cg_tol > 0.0 && opts.armijo > 0.0 && opts.armijo < 0.5) {
        return Err(Error::Domain("tolerances must be positive and the Armijo constant in (0, 1/2)".into()));
    }
    let n = surf.sites();
    let free: Vec<bool> = surf.truncation_mask().iter().map(|m| !m).collect();
    if !free.iter().any(|&f| f) {
        return Err(Error::Contract("every site is frozen".into()));
    }
    let w = surf.weights();
    let beta = 4.0 * PI * (chi as f64).abs();
    // without frozen sites constants are a null direction and P alone is used
    let has_frozen = free.iter().any(|&f| !f);

    let mut phi = phi0.values.clone();
    let mut value = ops_functional(surf, &phi)?;
    let mut history = Vec::new();
    // first gradient step: inverse of a Gershgorin bound on the L² Hessian
    let mut alpha_prev = 1.0
        / (0..n)
            .filter(|&i| free[i])
            .map(|i| (surf.laplacian().diagonal(i) / w[i]) + beta / surf.area())
            .fold(0.0, f64::max);
    let mut iterations = 0;
    let mut grad_norm;
    let mut last_move: Option<(Vec<f64>, Vec<f64>)> = None;
    loop {
        let (g, area) = euclidean_gradient(surf, &phi);
        grad_norm = (0..n).filter(|&i| free[i]).map(|i| (g[i] / w[i]).abs()).fold(0.0, f64::max);
        if grad_norm < opts.grad_tol || iterations >= opts.max_iter {
            history.push(IterationRecord { iteration: iterations, functional: value, grad_norm, step: 0.0 });
            break;
        }
        let d: Vec<f64> = match opts.step_rule {
            StepRule::Gradient => (0..n).map(|i| if free[i] { -g[i] / w[i] } else { 0.0 }).collect(),
            StepRule::Preconditioned => {
                let v: Vec<f64> = (0..n).map(|i| w[i] * (2.0 * phi[i]).exp()).collect();
                let shift: Vec<f64> = v.iter().map(|x| beta / area * x).collect();
                let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
                let mut d = solve_preconditioned(surf, &shift, &free, &rhs, opts.cg_tol);
                if has_frozen {
                    // Hessian = P − (β/A²) v vᵀ on free sites; Sherman–Morrison
                    let pv = solve_preconditioned(surf, &shift, &free, &v, opts.cg_tol);
                    let k = beta / (area * area);
                    let denom = 1.0 - k * sum((0..n).filter(|&i| free[i]).map(|i| v[i] * pv[i]));
                    if denom > 1e-12 {
                        let coef = k * sum((0..n).filter(|&i| free[i]).map(|i| v[i] * d[i])) / denom;
                        for i in 0..n {
                            d[i] += coef * pv[i];
                        }
                    }
                }
                d
            }
        };
        let slope = sum((0..n).map(|i| g[i] * d[i]));
        if !(slope < 0.0) {
            return Err(Error::LineSearch {
                iteration: iterations,
                reason: format!("not a descent direction (slope {slope:e})"),
            });
        }
        let sphi = surf.laplacian().apply(&phi);
        let mut alpha = match (opts.step_rule, &last_move) {
            (StepRule::Preconditioned, _) => 1.0,
            // Barzilai–Borwein trial step in the L² metric, checked by Armijo below
            (StepRule::Gradient, Some((step, field))) => {
                let ss = sum((0..n).map(|i| w[i] * step[i] * step[i]));
                let sy = sum((0..n).map(|i| w[i] * step[i] * (-d[i] - field[i])));
                let bb = ss / sy;
                if bb.is_finite() && bb > 0.0 {
                    bb
                } else {
                    2.0 * alpha_prev
                }
            }
            (StepRule::Gradient, None) => alpha_prev,
        };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let change = functional_change(surf, &phi, &sphi, area, &d, alpha);
            if change.is_finite() && change < 0.0 && change <= opts.armijo * alpha * slope {
                accepted = Some(change);
                break;
            }
            alpha *= 0.5;
        }
        let Some(change) = accepted else {
            return Err(Error::LineSearch {
                iteration: iterations,
                reason: format!(
                    "no sufficient decrease after {} halvings (gradient norm {grad_norm:e})",
                    opts.max_backtracks
                ),
            });
        };
        history.push(IterationRecord { iteration: iterations, functional: value, grad_norm, step: alpha });
        for i in 0..n {
            phi[i] += alpha * d[i];
        }
        if opts.step_rule == StepRule::Gradient {
            let step: Vec<f64> = d.iter().map(|x| alpha * x).collect();
            let field: Vec<f64> = d.iter().map(|x| -x).collect();
            last_move = Some((step, field));
        }
        value += change;
        alpha_prev = alpha;
        iterations += 1;
    }

    let decay_exponents = fit_decay_exponents(surf, &phi);
    let mut area_shift = 0.0;
    if opts.area_normalization {
        let target_area = -2.0 * PI * chi as f64;
        area_shift = 0.5 * (target_area / conformal_area(surf, &phi)).ln();
        for v in phi.iter_mut() {
            *v += area_shift;
        }
    }
    let stats = curvature_constancy(surf, &phi)?;
    let functional = ops_functional(surf, &phi)?;
    Ok(ExtremalReport {
        minimizer: ConformalFactor::fitted(surf, phi, phi0.decay_order),
        curvature_mean: stats.mean,
        curvature_stddev: stats.stddev,
        curvature_relative_stddev: stats.relative_stddev,
        max_interior_deviation: stats.max_interior_deviation,
        target: stats.target,
        area: stats.area,
        iterations,
        final_gradient_norm: grad_norm,
        converged: grad_norm < opts.grad_tol,
        functional,
        step_rule: opts.step_rule,
        area_shift,
        decay_exponents,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::synthetic::{
        cusped_surface, flat_torus, hyperbolic_closed, random_decaying_factor, synthetic_genus2, CuspedSpec,
    };
    use approx::assert_relative_eq;

    fn small_cusped() -> DiscreteSurface {
        cusped_surface(&CuspedSpec { n_y: 10, n_x: 8, core_u: 12, core_v: 12, top: 20.0, ..CuspedSpec::default() })
            .unwrap()
    }

    #[test]
    fn zero_factor_changes_nothing() {
        let s = small_cusped();
        let d = polyakov_delta(&s, &ConformalFactor::zero(s.sites())).unwrap();
        assert_eq!((d.energy_term, d.curvature_term, d.area_term, d.total), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_shift_on_chi_minus_one() {
        let s = small_cusped();
        let c = 0.37;
        let d = polyakov_delta(&s, &ConformalFactor::new(vec![c; s.sites()], 0.0, c)).unwrap();
        assert_relative_eq!(d.total, 7.0 * c / 3.0, max_relative = 1e-12);
        assert_eq!(d.energy_term, 0.0);
    }

    #[test]
    fn decay_violation_is_a_contract_error() {
        let s = small_cusped();
        let phi = ConformalFactor::new(vec![0.1; s.sites()], 2.0, 0.1);
        assert!(matches!(polyakov_delta(&s, &phi), Err(Error::Contract(_))));
    }

    #[test]
    fn cocycle_holds_to_rounding() {
        let s = small_cusped();
        for seed in 0..5 {
            let phi = random_decaying_factor(&s, seed, 0.3, 2.0);
            let psi = random_decaying_factor(&s, seed + 100, 0.3, 2.0);
            let c = cocycle_check(&s, &phi, &psi).unwrap();
            assert!(c.residual.abs() < 1e-13 * c.scale.max(1.0), "{c:?}");
        }
    }

    #[test]
    fn directional_derivative_matches_differences() {
        let s = small_cusped();
        let phi = random_decaying_factor(&s, 1, 0.2, 2.0);
        let psi = random_decaying_factor(&s, 2, 0.2, 2.0);
        let eps = 1e-4;
        let at = |u: f64| {
            let v: Vec<f64> = phi.values.iter().zip(&psi.values).map(|(a, b)| a + u * b).collect();
            polyakov_delta(&s, &ConformalFactor::new(v, 2.0, f64::INFINITY)).unwrap().total
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        let an = polyakov_directional(&s, &phi, &psi).unwrap();
        assert!((an - fd).abs() < 1e-7 * an.abs().max(1e-3), "{an} vs {fd}");
    }

    #[test]
    fn directional_vanishes_for_mean_zero_on_constant_curvature() {
        let s = hyperbolic_closed(2, 8, 8).unwrap();
        let mut psi: Vec<f64> = (0..s.sites()).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
        let mean = s.integrate(&psi) / s.area();
        psi.iter_mut().for_each(|v| *v -= mean);
        let v =
            polyakov_directional(&s, &ConformalFactor::zero(s.sites()), &ConformalFactor::new(psi, 0.0, 0.0)).unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn functional_identities() {
        let s = small_cusped();
        let chi = s.euler_char() as f64;
        assert_relative_eq!(
            ops_functional(&s, &vec![0.0; s.sites()]).unwrap(),
            -PI * chi * s.area().ln(),
            max_relative = 1e-14
        );
        for seed in 0..4 {
            let phi = random_decaying_factor(&s, seed, 0.4, 2.0);
            let f = polyakov_delta(&s, &phi).unwrap();
            let lhs = ops_functional(&s, &phi.values).unwrap() - ops_functional(&s, &vec![0.0; s.sites()]).unwrap();
            let rhs = -6.0 * PI * f.total + PI * (6.0 - chi) * f.area_term;
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn translation_invariance() {
        let s = synthetic_genus2(12, 12).unwrap();
        let gb = crate::surface::gauss_bonnet(&s).unwrap().residual.abs();
        let phi = random_decaying_factor(&s, 3, 0.5, 0.0).values;
        let base = ops_functional(&s, &phi).unwrap();
        for c in [-5.0, -1.0, 1.0, 5.0] {
            let shifted: Vec<f64> = phi.iter().map(|v| v + c).collect();
            let diff = (ops_functional(&s, &shifted).unwrap() - base).abs();
            assert!(diff <= c.abs() * gb + 64.0 * f64::EPSILON * base.abs().max(1.0), "c = {c}: {diff}");
        }
    }

    #[test]
    fn gradient_matches_differences_and_ignores_constants() {
        let s = small_cusped();
        let phi = random_decaying_factor(&s, 5, 0.3, 2.0).values;
        let psi = random_decaying_factor(&s, 6, 0.3, 2.0).values;
        let r = ops_gradient(&s, &phi).unwrap();
        let an = s.integrate(&r.iter().zip(&psi).map(|(a, b)| a * b).collect::<Vec<_>>());
        let eps = 1e-4;
        let at =
            |u: f64| ops_functional(&s, &phi.iter().zip(&psi).map(|(a, b)| a + u * b).collect::<Vec<_>>()).unwrap();
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        assert!((an - fd).abs() < 1e-6 * an.abs(), "{an} vs {fd}");
        assert!(s.integrate(&r).abs() < 1e-11);
    }

    #[test]
    fn hyperbolic_metric_is_stationary() {
        let s = hyperbolic_closed(2, 10, 10).unwrap();
        let r = ops_gradient(&s, &vec![0.0; s.sites()]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-13));
        let st = curvature_constancy(&s, &vec![0.0; s.sites()]).unwrap();
        assert_eq!(st.stddev, 0.0);
        assert_relative_eq!(st.mean, -1.0, max_relative = 1e-14);
    }

    #[test]
    fn convexity_probe() {
        let s = small_cusped();
        let a = random_decaying_factor(&s, 11, 0.5, 2.0).values;
        let b = random_decaying_factor(&s, 12, 0.5, 2.0).values;
        let (fa, fb) = (ops_functional(&s, &a).unwrap(), ops_functional(&s, &b).unwrap());
        for u in [0.1, 0.25, 0.5, 0.9] {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| u * x + (1.0 - u) * y).collect();
            assert!(ops_functional(&s, &mix).unwrap() <= u * fa + (1.0 - u) * fb + 1e-12);
        }
    }

    #[test]
    fn minimizer_at_the_extremal_metric_takes_no_steps() {
        let s = small_cusped();
        let r = minimize_ops(&s, &ConformalFactor::zero(s.sites()), &MinimizeOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert_relative_eq!(r.curvature_mean, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn minimizer_recovers_constant_curvature() {
        let s = small_cusped();
        let phi0 = random_decaying_factor(&s, 9, 0.3, 2.0);
        for rule in [StepRule::Preconditioned, StepRule::Gradient] {
            let opts = MinimizeOptions {
                step_rule: rule,
                max_iter: 20000,
                grad_tol: 1e-7,
                area_normalization: true,
                ..MinimizeOptions::default()
            };
            let r = minimize_ops(&s, &phi0, &opts).unwrap();
            assert!(r.converged, "{rule:?}: {}", r.final_gradient_norm);
            assert!(r.curvature_relative_stddev < 1e-6, "{rule:?}: {}", r.curvature_relative_stddev);
            assert!((r.curvature_mean + 1.0).abs() < 1e-6);
            assert!(r.history.windows(2).all(|w| w[1].functional <= w[0].functional));
        }
    }

    #[test]
    fn minimizer_on_non_constant_curvature() {
        let s = synthetic_genus2(16, 16).unwrap();
        let r = minimize_ops(&s, &ConformalFactor::zero(s.sites()), &MinimizeOptions::default()).unwrap();
        assert!(r.converged && r.iterations > 0);
        assert!(r.curvature_relative_stddev < 1e-8);
        assert!((r.curvature_mean - r.target).abs() < 1e-8);
    }

    #[test]
    fn minimizer_needs_negative_euler_characteristic() {
        let s = flat_torus(6, 6, 1.0).unwrap();
        let r = minimize_ops(&s, &ConformalFactor::zero(s.sites()), &MinimizeOptions::default());
        assert!(matches!(r, Err(Error::Contract(_))));
    }
}
