//! Discrete surfaces with cusps.
//!
//! A surface is a set of sites with area weights `w_i` (the measure `dA_g`),
//! a curvature sample `K_i` and one symmetric Laplacian form `S`. The
//! Laplace–Beltrami action is `(Δ_g φ)_i = (Sφ)_i / w_i`. A conformal change
//! `h = e^{2φ}g` keeps `S` (Dirichlet energy is conformally invariant in two
//! dimensions) and rescales the weights, so `Δ_h = e^{−2φ}Δ_g` exactly.

pub mod io;
pub mod laplacian;
pub mod synthetic;

pub use io::{load_surface, parse_surface, save_surface, surface_to_json, LoadReport, LoadedSurface};
pub use laplacian::{Edge, EdgeLaplacian};

use crate::error::{domain, Error, Result};
use crate::quadrature::{compensated_sum, CompensatedSum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Sites of one cusp with their height coordinate `y ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub sites: Vec<usize>,
    pub y: Vec<f64>,
    /// Length of the `x` circle.
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    2.0 * PI
}

impl Cusp {
    pub fn top(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sites on the outermost (truncation) row.
    pub fn top_row(&self) -> impl Iterator<Item = usize> + '_ {
        let top = self.top();
        self.sites.iter().zip(&self.y).filter(move |(_, &y)| y >= top * (1.0 - 1e-12)).map(|(&s, _)| s)
    }
}

fn invariant(name: &str, detail: impl Into<String>) -> Error {
    Error::Load { invariant: name.into(), detail: detail.into() }
}

#[derive(Clone, Debug)]
pub struct DiscreteSurface {
    name: String,
    weights: Vec<f64>,
    curvature: Vec<f64>,
    laplacian: Arc<EdgeLaplacian>,
    genus: u32,
    cusps: Arc<Vec<Cusp>>,
    tolerance: f64,
    complete: bool,
}

/// Raw parts of a surface, validated by [`DiscreteSurface::new`].
#[derive(Clone, Debug)]
pub struct SurfaceParts {
    pub name: String,
    pub weights: Vec<f64>,
    pub curvature: Vec<f64>,
    pub laplacian: EdgeLaplacian,
    pub genus: u32,
    pub cusps: Vec<Cusp>,
    pub tolerance: f64,
    /// `false` for fragments that do not close up into a surface.
    pub complete: bool,
}

impl DiscreteSurface {
    /// Validate and assemble. Invariant failures come back as
    /// [`Error::Load`] naming the invariant.
    pub fn new(parts: SurfaceParts) -> Result<Self> {
        let n = parts.weights.len();
        if n == 0 {
            return Err(invariant("sites", "surface has no sites"));
        }
        if parts.curvature.len() != n || parts.laplacian.sites() != n {
            return Err(invariant(
                "dimensions",
                format!(
                    "{} weights, {} curvature values, Laplacian on {} sites",
                    n,
                    parts.curvature.len(),
                    parts.laplacian.sites()
                ),
            ));
        }
        if let Some((i, w)) = parts.weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(invariant("weights.positive", format!("weight {w} at site {i}")));
        }
        if let Some(i) = parts.curvature.iter().position(|k| !k.is_finite()) {
            return Err(invariant("curvature.finite", format!("site {i}")));
        }
        if let Some(e) = parts.laplacian.edges().iter().find(|e| e.c < 0.0) {
            return Err(invariant("laplacian.psd", format!("negative edge weight {} on ({}, {})", e.c, e.i, e.j)));
        }
        if !(parts.tolerance.is_finite() && parts.tolerance > 0.0) {
            return Err(invariant("tolerance", format!("mesh tolerance must be positive, got {}", parts.tolerance)));
        }
        let mut owner = vec![false; n];
        for (c, cusp) in parts.cusps.iter().enumerate() {
            if cusp.sites.len() != cusp.y.len() || cusp.sites.is_empty() {
                return Err(invariant(
                    "cusps",
                    format!("cusp {c}: {} sites, {} heights", cusp.sites.len(), cusp.y.len()),
                ));
            }
            if !(cusp.width.is_finite() && cusp.width > 0.0) {
                return Err(invariant("cusps", format!("cusp {c}: width {}", cusp.width)));
            }
            for (&s, &y) in cusp.sites.iter().zip(&cusp.y) {
                if s >= n {
                    return Err(invariant("cusps", format!("cusp {c}: site {s} out of range")));
                }
                if owner[s] {
                    return Err(invariant("cusps", format!("site {s} belongs to two cusps")));
                }
                owner[s] = true;
                if !(y.is_finite() && y >= 1.0) {
                    return Err(invariant("cusps", format!("cusp {c}: height {y} at site {s} is below 1")));
                }
            }
        }
        let surface = Self {
            name: parts.name,
            weights: parts.weights,
            curvature: parts.curvature,
            laplacian: Arc::new(parts.laplacian),
            genus: parts.genus,
            cusps: Arc::new(parts.cusps),
            tolerance: parts.tolerance,
            complete: parts.complete,
        };
        if surface.complete {
            let gb = gauss_bonnet(&surface)?;
            if !gb.passed {
                return Err(invariant(
                    "gauss_bonnet",
                    format!("Σ w K = {} but 2πχ = {} (tolerance {})", gb.integral, gb.expected, gb.tolerance),
                ));
            }
        }
        Ok(surface)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn sites(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn laplacian(&self) -> &EdgeLaplacian {
        &self.laplacian
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn cusps(&self) -> &[Cusp] {
        &self.cusps
    }

    /// `χ = 2 − 2p − m`.
    pub fn euler_char(&self) -> i64 {
        2 - 2 * i64::from(self.genus) - self.cusps.len() as i64
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn area(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// `Σ_i w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.sites());
        let mut acc = CompensatedSum::<f64>::default();
        for (w, v) in self.weights.iter().zip(f) {
            acc.add(w * v);
        }
        acc.value()
    }

    /// `(Δ_g φ)_i = (Sφ)_i / w_i`.
    pub fn laplace_beltrami(&self, phi: &[f64]) -> Vec<f64> {
        let mut s = self.laplacian.apply(phi);
        for (v, w) in s.iter_mut().zip(&self.weights) {
            *v /= w;
        }
        s
    }

    /// Mask of sites on the outermost row of some cusp.
    pub fn truncation_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.sites()];
        for cusp in self.cusps.iter() {
            for s in cusp.top_row() {
                mask[s] = true;
            }
        }
        mask
    }
}

/// Conformal exponent `φ` with its declared cusp decay `|φ| ≤ bound · y^{−k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub values: Vec<f64>,
    pub decay_order: f64,
    pub decay_bound: f64,
}

impl ConformalFactor {
    pub fn new(values: Vec<f64>, decay_order: f64, decay_bound: f64) -> Self {
        Self { values, decay_order, decay_bound }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0.0; n], 0.0, 0.0)
    }

    /// Same values, declared bound set to the measured one.
    pub fn fitted(surf: &DiscreteSurface, values: Vec<f64>, decay_order: f64) -> Self {
        let mut f = Self::new(values, decay_order, 0.0);
        f.decay_bound = f.decay_measure(surf);
        f
    }

    /// `max |φ| y^k` over cusp sites (0 without cusps).
    pub fn decay_measure(&self, surf: &DiscreteSurface) -> f64 {
        let mut worst = 0.0f64;
        for cusp in surf.cusps() {
            for (&s, &y) in cusp.sites.iter().zip(&cusp.y) {
                worst = worst.max(self.values[s].abs() * y.powf(self.decay_order));
            }
        }
        worst
    }

    /// Length and decay-class check; returns the measured decay constant.
    pub fn check(&self, surf: &DiscreteSurface) -> Result<f64> {
        if self.values.len() != surf.sites() {
            return Err(Error::Contract(format!(
                "conformal factor has {} values for {} sites",
                self.values.len(),
                surf.sites()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("conformal factor is not finite at site {i}")));
        }
        let measured = self.decay_measure(surf);
        if measured > self.decay_bound * (1.0 + 1e-12) {
            return Err(Error::Contract(format!(
                "conformal factor leaves its decay class: max |φ| y^{} = {measured:.6e} > {:.6e}",
                self.decay_order, self.decay_bound
            )));
        }
        Ok(measured)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    /// `Σ w_i K_i`
    pub integral: f64,
    /// `2πχ`
    pub expected: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Geometric `y` nodes of a cusp grid on `[a, top]` and the dual cell
/// boundaries (geometric midpoints). With `tail`, the last cell extends to
/// infinity so the cusp carries its full area `width/a`.
pub(crate) struct CuspBlock {
    pub weights: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    pub cusp: Cusp,
}

pub(crate) fn cusp_block(a: f64, top: f64, n_y: usize, n_x: usize, width: f64, tail: bool, offset: usize) -> CuspBlock {
    let ratio = top / a;
    let y: Vec<f64> = (0..n_y).map(|k| a * ratio.powf(k as f64 / (n_y - 1) as f64)).collect();
    let mut bounds = Vec::with_capacity(n_y + 1);
    bounds.push(a);
    for k in 1..n_y {
        bounds.push((y[k - 1] * y[k]).sqrt());
    }
    bounds.push(top);
    let dx = width / n_x as f64;
    let id = |k: usize, j: usize| offset + k * n_x + (j % n_x);

    let mut weights = Vec::with_capacity(n_y * n_x);
    let mut edges = Vec::with_capacity(2 * n_y * n_x);
    let mut cusp = Cusp { sites: Vec::with_capacity(n_y * n_x), y: Vec::with_capacity(n_y * n_x), width };
    for k in 0..n_y {
        let upper_inv = if tail && k == n_y - 1 { 0.0 } else { 1.0 / bounds[k + 1] };
        let w = dx * (1.0 / bounds[k] - upper_inv);
        let dual_height = bounds[k + 1] - bounds[k];
        for j in 0..n_x {
            weights.push(w);
            cusp.sites.push(id(k, j));
            cusp.y.push(y[k]);
            edges.push((id(k, j), id(k, j + 1), dual_height / dx));
            if k + 1 < n_y {
                edges.push((id(k, j), id(k + 1, j), dx / (y[k + 1] - y[k])));
            }
        }
    }
    CuspBlock { weights, edges, cusp }
}

pub(crate) fn check_cusp_resolution(a: f64, top: f64, n_y: usize, n_x: usize) -> Result<()> {
    if !(a.is_finite() && a >= 1.0) {
        return domain(format!("cusp start must be >= 1, got {a}"));
    }
    if !(top.is_finite() && top > a) {
        return domain(format!("truncation height must exceed the start {a}, got {top}"));
    }
    if n_y < 8 || n_x < 4 {
        return domain(format!("cusp grid needs n_y >= 8 and n_x >= 4, got {n_y} x {n_x}"));
    }
    Ok(())
}

/// Hyperbolic cusp fragment `[a, Y] × S¹` (circle of length 2π) with metric
/// `y⁻²(dy² + dx²)`: geometric rows in `y`, uniform columns in `x`,
/// curvature `−1`. The fragment is not a closed surface.
pub fn build_cusp_grid(a: f64, top: f64, n_y: usize, n_x: usize) -> Result<DiscreteSurface> {
    check_cusp_resolution(a, top, n_y, n_x)?;
    let block = cusp_block(a, top, n_y, n_x, 2.0 * PI, false, 0);
    let n = block.weights.len();
    DiscreteSurface::new(SurfaceParts {
        name: format!("cusp_fragment_a{a}_y{top}"),
        curvature: vec![-1.0; n],
        laplacian: EdgeLaplacian::new(n, block.edges)?,
        weights: block.weights,
        genus: 0,
        cusps: vec![block.cusp],
        tolerance: 1e-9,
        complete: false,
    })
}

/// `h = e^{2φ}g`: `w_h = e^{2φ}w`, `K_h = e^{−2φ}(Δ_gφ + K_g)`, same form `S`.
pub fn conformal_transform(surf: &DiscreteSurface, phi: &ConformalFactor) -> Result<DiscreteSurface> {
    if phi.values.len() != surf.sites() {
        return Err(Error::Contract(format!(
            "conformal factor has {} values for {} sites",
            phi.values.len(),
            surf.sites()
        )));
    }
    let lap = surf.laplace_beltrami(&phi.values);
    let mut weights = Vec::with_capacity(surf.sites());
    let mut curvature = Vec::with_capacity(surf.sites());
    for i in 0..surf.sites() {
        let e2 = (2.0 * phi.values[i]).exp();
        weights.push(surf.weights[i] * e2);
        curvature.push((lap[i] + surf.curvature[i]) / e2);
    }
    Ok(DiscreteSurface {
        name: surf.name.clone(),
        weights,
        curvature,
        laplacian: Arc::clone(&surf.laplacian),
        genus: surf.genus,
        cusps: Arc::clone(&surf.cusps),
        tolerance: surf.tolerance,
        complete: surf.complete,
    })
}

/// `Σ w_i K_i − 2πχ` against the mesh tolerance.
pub fn gauss_bonnet(surf: &DiscreteSurface) -> Result<GaussBonnetReport> {
    if !surf.complete {
        return Err(Error::Contract(format!(
            "surface '{}' is a fragment; Gauss–Bonnet needs a complete surface",
            surf.name
        )));
    }
    let integral = surf.integrate(&surf.curvature);
    let expected = 2.0 * PI * surf.euler_char() as f64;
    let residual = integral - expected;
    Ok(GaussBonnetReport {
        integral,
        expected,
        residual,
        tolerance: surf.tolerance,
        passed: residual.abs() <= surf.tolerance,
    })
}

/// `∫|∇φ|² dA = ⟨φ, Sφ⟩`.
pub fn dirichlet_energy(surf: &DiscreteSurface, phi: &[f64]) -> Result<f64> {
    if phi.len() != surf.sites() {
        return Err(Error::Contract(format!("{} values for {} sites", phi.len(), surf.sites())));
    }
    Ok(surf.laplacian.energy(phi))
}

/// `∫ φ Δφ dA` through the weighted pairing; equals [`dirichlet_energy`] up
/// to rounding for any choice of conformal weights.
pub fn dirichlet_energy_paired(surf: &DiscreteSurface, phi: &[f64]) -> Result<f64> {
    if phi.len() != surf.sites() {
        return Err(Error::Contract(format!("{} values for {} sites", phi.len(), surf.sites())));
    }
    let lap = surf.laplace_beltrami(phi);
    let f: Vec<f64> = phi.iter().zip(&lap).map(|(a, b)| a * b).collect();
    Ok(surf.integrate(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cusp_fragment_area_and_curvature() {
        for top in [4.0, 10.0, 50.0] {
            let s = build_cusp_grid(1.0, top, 24, 8).unwrap();
            assert_relative_eq!(s.area(), 2.0 * PI * (1.0 - 1.0 / top), max_relative = 1e-13);
            assert!(s.curvature().iter().all(|&k| k == -1.0));
            assert!(s.laplacian().apply(&vec![1.0; s.sites()]).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cusp_fragment_rejects_coarse_grids() {
        assert!(build_cusp_grid(1.0, 5.0, 7, 8).is_err());
        assert!(build_cusp_grid(1.0, 5.0, 8, 3).is_err());
        assert!(build_cusp_grid(2.0, 2.0, 8, 8).is_err());
        assert!(build_cusp_grid(0.5, 2.0, 8, 8).is_err());
    }

    #[test]
    fn fragment_refuses_gauss_bonnet() {
        let s = build_cusp_grid(1.0, 5.0, 8, 4).unwrap();
        assert!(matches!(gauss_bonnet(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn laplacian_approximates_cusp_operator() {
        // −y²(∂²_y + ∂²_x) of y^{1/2}·cos x is (1/4 + y²)·y^{1/2} cos x
        let s = build_cusp_grid(1.0, 3.0, 200, 64).unwrap();
        let cusp = &s.cusps()[0];
        let n_x = 64;
        let phi: Vec<f64> = (0..s.sites())
            .map(|i| {
                let x = 2.0 * PI * (i % n_x) as f64 / n_x as f64;
                cusp.y[i].sqrt() * x.cos()
            })
            .collect();
        let lap = s.laplace_beltrami(&phi);
        let i = 100 * n_x + 5;
        let (y, x) = (cusp.y[i], 2.0 * PI * 5.0 / n_x as f64);
        let exact = (0.25 + y * y) * y.sqrt() * x.cos();
        assert!((lap[i] - exact).abs() < 1e-2 * exact.abs(), "{} vs {exact}", lap[i]);
    }

    #[test]
    fn zero_factor_is_identity() {
        let s = build_cusp_grid(1.0, 5.0, 10, 6).unwrap();
        let h = conformal_transform(&s, &ConformalFactor::zero(s.sites())).unwrap();
        assert_eq!(h.weights(), s.weights());
        assert_eq!(h.curvature(), s.curvature());
    }

    #[test]
    fn constant_factor_scales() {
        let s = build_cusp_grid(1.0, 5.0, 10, 6).unwrap();
        let c = 0.3;
        let h = conformal_transform(&s, &ConformalFactor::new(vec![c; s.sites()], 0.0, c)).unwrap();
        assert_relative_eq!(h.area(), s.area() * (2.0 * c).exp(), max_relative = 1e-14);
        for (kh, kg) in h.curvature().iter().zip(s.curvature()) {
            assert_relative_eq!(*kh, (-2.0 * c).exp() * kg, max_relative = 1e-14);
        }
        assert_relative_eq!(h.integrate(h.curvature()), s.integrate(s.curvature()), max_relative = 1e-13);
    }

    #[test]
    fn decay_class_check() {
        let s = build_cusp_grid(1.0, 10.0, 10, 4).unwrap();
        let cusp = &s.cusps()[0];
        let values: Vec<f64> = cusp.y.iter().map(|y| 0.5 / (y * y)).collect();
        let ok = ConformalFactor::new(values.clone(), 2.0, 0.5);
        assert!(ok.check(&s).unwrap() <= 0.5 + 1e-15);
        let too_slow = ConformalFactor::new(values, 3.0, 0.5);
        assert!(matches!(too_slow.check(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn energy_is_quadratic_and_kills_constants() {
        let s = build_cusp_grid(1.0, 5.0, 10, 6).unwrap();
        let phi: Vec<f64> = (0..s.sites()).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let e = dirichlet_energy(&s, &phi).unwrap();
        let twice: Vec<f64> = phi.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(dirichlet_energy(&s, &twice).unwrap(), 4.0 * e, max_relative = 1e-14);
        assert_eq!(dirichlet_energy(&s, &vec![1.7; s.sites()]).unwrap(), 0.0);
        assert_relative_eq!(dirichlet_energy_paired(&s, &phi).unwrap(), e, max_relative = 1e-12);
    }
}
