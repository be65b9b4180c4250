//! Generated surfaces with prescribed weights, curvature and topology.
//!
//! The compact part is a periodic `n_u × n_v` grid with unit stiffness. Its
//! graph is a torus whatever genus is declared; only the weights, curvature
//! and `χ` enter the computations, and they satisfy Gauss–Bonnet to rounding.

use super::{
    check_cusp_resolution, conformal_transform, cusp_block, ConformalFactor, DiscreteSurface, EdgeLaplacian,
    SurfaceParts,
};
use crate::error::{domain, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const MESH_TOLERANCE: f64 = 1e-9;

fn torus_edges(n_u: usize, n_v: usize) -> Vec<(usize, usize, f64)> {
    let id = |iu: usize, iv: usize| (iv % n_v) * n_u + (iu % n_u);
    let mut edges = Vec::with_capacity(2 * n_u * n_v);
    for iv in 0..n_v {
        for iu in 0..n_u {
            edges.push((id(iu, iv), id(iu + 1, iv), 1.0));
            edges.push((id(iu, iv), id(iu, iv + 1), 1.0));
        }
    }
    edges
}

fn check_core(n_u: usize, n_v: usize) -> Result<()> {
    if n_u < 3 || n_v < 3 {
        return domain(format!("core grid needs at least 3 x 3 sites, got {n_u} x {n_v}"));
    }
    Ok(())
}

/// Flat torus (`K ≡ 0`, genus 1) of the given area.
pub fn flat_torus(n_u: usize, n_v: usize, area: f64) -> Result<DiscreteSurface> {
    check_core(n_u, n_v)?;
    if !(area > 0.0 && area.is_finite()) {
        return domain(format!("area must be positive, got {area}"));
    }
    let n = n_u * n_v;
    DiscreteSurface::new(SurfaceParts {
        name: "flat_torus".into(),
        weights: vec![area / n as f64; n],
        curvature: vec![0.0; n],
        laplacian: EdgeLaplacian::new(n, torus_edges(n_u, n_v))?,
        genus: 1,
        cusps: Vec::new(),
        tolerance: MESH_TOLERANCE,
        complete: true,
    })
}

/// Closed surface of genus `p ≥ 2` with `K ≡ −1` and area `4π(p − 1)`.
pub fn hyperbolic_closed(genus: u32, n_u: usize, n_v: usize) -> Result<DiscreteSurface> {
    check_core(n_u, n_v)?;
    if genus < 2 {
        return domain(format!("a closed hyperbolic surface needs genus >= 2, got {genus}"));
    }
    let n = n_u * n_v;
    let area = 4.0 * PI * (f64::from(genus) - 1.0);
    DiscreteSurface::new(SurfaceParts {
        name: format!("hyperbolic_genus{genus}"),
        weights: vec![area / n as f64; n],
        curvature: vec![-1.0; n],
        laplacian: EdgeLaplacian::new(n, torus_edges(n_u, n_v))?,
        genus,
        cusps: Vec::new(),
        tolerance: MESH_TOLERANCE,
        complete: true,
    })
}

/// Layout of a hyperbolic surface with cusps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspedSpec {
    pub genus: u32,
    pub cusps: u32,
    /// Height where each cusp starts.
    pub start: f64,
    /// Truncation height.
    pub top: f64,
    pub n_y: usize,
    pub n_x: usize,
    pub core_u: usize,
    pub core_v: usize,
}

impl Default for CuspedSpec {
    fn default() -> Self {
        Self { genus: 1, cusps: 1, start: 2.0, top: 40.0, n_y: 24, n_x: 16, core_u: 24, core_v: 24 }
    }
}

impl CuspedSpec {
    /// Twice the resolution in both cusp directions.
    pub fn refined(&self) -> Self {
        Self { n_y: 2 * self.n_y, n_x: 2 * self.n_x, ..*self }
    }
}

/// `K ≡ −1` surface of genus `p` with `m` cusps `[a, ∞) × S¹` truncated at `Y`.
///
/// The outermost cusp row also carries the hyperbolic area above `Y`, so each
/// cusp has its full area `2π/a` and the total area is `−2πχ`. The core grid
/// takes the remaining area; each cusp's bottom row is tied to one core row.
pub fn cusped_surface(spec: &CuspedSpec) -> Result<DiscreteSurface> {
    check_core(spec.core_u, spec.core_v)?;
    check_cusp_resolution(spec.start, spec.top, spec.n_y, spec.n_x)?;
    if spec.cusps == 0 {
        return domain("at least one cusp is required");
    }
    if spec.cusps as usize > spec.core_v {
        return domain("the core grid is too small to attach the cusps");
    }
    let chi = 2 - 2 * i64::from(spec.genus) - i64::from(spec.cusps);
    let width = 2.0 * PI;
    let total = -2.0 * PI * chi as f64;
    let core_area = total - f64::from(spec.cusps) * width / spec.start;
    if !(core_area > 0.0) {
        return domain(format!(
            "no room for the core: total area {total:.6} does not exceed the cusp area; raise the genus, the cusp count or the start height"
        ));
    }
    let n_core = spec.core_u * spec.core_v;
    let mut weights = vec![core_area / n_core as f64; n_core];
    let mut edges = torus_edges(spec.core_u, spec.core_v);
    let mut cusps = Vec::new();
    for c in 0..spec.cusps as usize {
        let offset = weights.len();
        let block = cusp_block(spec.start, spec.top, spec.n_y, spec.n_x, width, true, offset);
        let row = c * spec.core_v / spec.cusps as usize;
        for j in 0..spec.n_x {
            let core_site = row * spec.core_u + j * spec.core_u / spec.n_x;
            edges.push((offset + j, core_site, 1.0));
        }
        weights.extend(block.weights);
        edges.extend(block.edges);
        cusps.push(block.cusp);
    }
    let n = weights.len();
    DiscreteSurface::new(SurfaceParts {
        name: format!("cusped_genus{}_cusps{}", spec.genus, spec.cusps),
        weights,
        curvature: vec![-1.0; n],
        laplacian: EdgeLaplacian::new(n, edges)?,
        genus: spec.genus,
        cusps,
        tolerance: MESH_TOLERANCE,
        complete: true,
    })
}

/// Smooth factor on the core torus grid: a few low Fourier modes.
pub fn smooth_core_factor(n_u: usize, n_v: usize, amplitude: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_u * n_v);
    for iv in 0..n_v {
        for iu in 0..n_u {
            let (u, v) = (2.0 * PI * iu as f64 / n_u as f64, 2.0 * PI * iv as f64 / n_v as f64);
            out.push(amplitude * (u.sin() * v.cos() + 0.5 * (2.0 * u + 1.0).cos() - 0.3 * (u - 2.0 * v).sin()));
        }
    }
    out
}

/// Genus-2 surface with non-constant curvature: the hyperbolic grid after a
/// smooth conformal change. Its constant-curvature representative is known.
pub fn synthetic_genus2(n_u: usize, n_v: usize) -> Result<DiscreteSurface> {
    let base = hyperbolic_closed(2, n_u, n_v)?;
    let phi = ConformalFactor::new(smooth_core_factor(n_u, n_v, 0.25), 0.0, 0.0);
    Ok(conformal_transform(&base, &phi)?.with_name("synthetic_genus2"))
}

/// Seeded random factor: uniform noise of size `amplitude`, damped on cusps
/// as `(y₀/y)^k` and zero on the truncation rows. The declared bound is
/// `amplitude · max y₀^k`.
pub fn random_decaying_factor(surf: &DiscreteSurface, seed: u64, amplitude: f64, decay_order: f64) -> ConformalFactor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..surf.sites()).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    let mut bound = 0.0f64;
    for cusp in surf.cusps() {
        let y0 = cusp.y.iter().copied().fold(f64::INFINITY, f64::min);
        bound = bound.max(amplitude * y0.powf(decay_order));
        for (&s, &y) in cusp.sites.iter().zip(&cusp.y) {
            values[s] *= (y0 / y).powf(decay_order);
        }
        for s in cusp.top_row() {
            values[s] = 0.0;
        }
    }
    ConformalFactor::new(values, decay_order, bound)
}

/// Names of the surfaces shipped in `data/`.
pub const BUNDLED: [&str; 4] = ["synthetic_genus2", "hyperbolic_genus2", "flat_torus", "cusped_torus"];

/// Regenerate a bundled surface by name.
pub fn bundled(name: &str) -> Result<DiscreteSurface> {
    match name {
        "synthetic_genus2" => synthetic_genus2(24, 24),
        "hyperbolic_genus2" => hyperbolic_closed(2, 24, 24),
        "flat_torus" => flat_torus(16, 16, 1.0),
        "cusped_torus" => Ok(cusped_surface(&CuspedSpec::default())?.with_name("cusped_torus")),
        other => domain(format!("no bundled surface named '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::gauss_bonnet;
    use approx::assert_relative_eq;

    #[test]
    fn closed_surfaces_satisfy_gauss_bonnet() {
        for s in
            [flat_torus(8, 6, 3.0).unwrap(), hyperbolic_closed(3, 10, 12).unwrap(), synthetic_genus2(16, 16).unwrap()]
        {
            let gb = gauss_bonnet(&s).unwrap();
            assert!(gb.residual.abs() < 1e-12, "{}: {gb:?}", s.name());
        }
    }

    #[test]
    fn cusped_surface_area_and_topology() {
        let s = cusped_surface(&CuspedSpec::default()).unwrap();
        assert_eq!(s.euler_char(), -1);
        assert_relative_eq!(s.area(), 2.0 * PI, max_relative = 1e-13);
        assert!(gauss_bonnet(&s).unwrap().residual.abs() < 1e-12);
        let two = cusped_surface(&CuspedSpec { genus: 2, cusps: 2, ..CuspedSpec::default() }).unwrap();
        assert_eq!(two.euler_char(), -4);
        assert_eq!(two.cusps().len(), 2);
    }

    #[test]
    fn cusped_surface_needs_room_for_the_core() {
        let spec = CuspedSpec { genus: 1, cusps: 1, start: 1.0, ..CuspedSpec::default() };
        assert!(cusped_surface(&spec).is_err());
    }

    #[test]
    fn synthetic_genus2_has_varying_curvature() {
        let s = synthetic_genus2(16, 16).unwrap();
        let k = s.curvature();
        let (lo, hi) = k.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo > 0.1);
    }

    #[test]
    fn random_factor_is_seeded_and_decays() {
        let s = cusped_surface(&CuspedSpec::default()).unwrap();
        let a = random_decaying_factor(&s, 7, 0.2, 2.0);
        let b = random_decaying_factor(&s, 7, 0.2, 2.0);
        assert_eq!(a, b);
        assert!(a.check(&s).is_ok());
        let mask = s.truncation_mask();
        assert!(a.values.iter().zip(&mask).all(|(v, &m)| !m || *v == 0.0));
    }
}
