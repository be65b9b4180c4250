//! JSON surface files.
//!
//! ```text
//! { "sites": N, "weights": [..], "curvature": [..], "genus": p,
//!   "laplacian": {"format": "triplets", "entries": [[i, j, v], ..]},
//!   "cusps": [{"sites": [..], "y": [..], "width": 2π}], "tolerance": t,
//!   "complete": true, "name": "..." }
//! ```
//!
//! The triplets describe the whole matrix `L` (diagonal included). Off-diagonal
//! pairs are symmetrized as `c_ij = −(L_ij + L_ji)/2`; each row must sum to zero.

use super::{gauss_bonnet, Cusp, DiscreteSurface, EdgeLaplacian, GaussBonnetReport, SurfaceParts};
use crate::error::{Error, Result};
use crate::output::json_string;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Asymmetry above this is reported (the matrix is still symmetrized).
pub const ASYMMETRY_REPORT: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct LaplacianJson {
    format: String,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct SurfaceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    sites: usize,
    weights: Vec<f64>,
    laplacian: LaplacianJson,
    curvature: Vec<f64>,
    genus: u32,
    #[serde(default)]
    cusps: Vec<Cusp>,
    tolerance: f64,
    #[serde(default = "yes")]
    complete: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct LoadReport {
    pub sites: usize,
    pub edges: usize,
    pub euler_char: i64,
    pub max_asymmetry: f64,
    pub asymmetric_pairs: usize,
    pub gauss_bonnet: Option<GaussBonnetReport>,
}

#[derive(Clone, Debug)]
pub struct LoadedSurface {
    pub surface: DiscreteSurface,
    pub report: LoadReport,
}

fn schema(detail: impl std::fmt::Display) -> Error {
    Error::Load { invariant: "schema".into(), detail: detail.to_string() }
}

pub fn parse_surface(text: &str) -> Result<LoadedSurface> {
    let raw: SurfaceJson = serde_json::from_str(text).map_err(schema)?;
    let n = raw.sites;
    if raw.weights.len() != n || raw.curvature.len() != n {
        return Err(schema(format!(
            "\"sites\" is {n} but there are {} weights and {} curvature values",
            raw.weights.len(),
            raw.curvature.len()
        )));
    }
    if raw.laplacian.format != "triplets" {
        return Err(schema(format!("unsupported laplacian format '{}'", raw.laplacian.format)));
    }

    let mut diag = vec![0.0; n];
    // (i < j) -> (L_ij, L_ji)
    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for &(i, j, v) in &raw.laplacian.entries {
        if i >= n || j >= n {
            return Err(schema(format!("laplacian entry ({i}, {j}) out of range")));
        }
        if !v.is_finite() {
            return Err(Error::Load { invariant: "laplacian.finite".into(), detail: format!("entry ({i}, {j})") });
        }
        if i == j {
            diag[i] += v;
        } else if i < j {
            pairs.entry((i, j)).or_insert((0.0, 0.0)).0 += v;
        } else {
            pairs.entry((j, i)).or_insert((0.0, 0.0)).1 += v;
        }
    }
    let mut max_asymmetry = 0.0f64;
    let mut asymmetric_pairs = 0;
    let mut edges = Vec::with_capacity(pairs.len());
    let mut row_sum = diag.clone();
    let mut row_scale: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
    for (&(i, j), &(lij, lji)) in &pairs {
        let asym = (lij - lji).abs();
        max_asymmetry = max_asymmetry.max(asym);
        if asym > ASYMMETRY_REPORT {
            asymmetric_pairs += 1;
        }
        let c = -0.5 * (lij + lji);
        for k in [i, j] {
            row_sum[k] -= c;
            row_scale[k] += c.abs();
        }
        edges.push((i, j, c));
    }
    if let Some(i) = (0..n).find(|&i| row_sum[i].abs() > 1e-10 * row_scale[i].max(1e-300)) {
        return Err(Error::Load {
            invariant: "laplacian.constant_kernel".into(),
            detail: format!("row {i} sums to {:e}", row_sum[i]),
        });
    }
    let laplacian = EdgeLaplacian::new(n, edges).map_err(|e| schema(e))?;
    let edges = laplacian.edges().len();
    let surface = DiscreteSurface::new(SurfaceParts {
        name: raw.name.unwrap_or_else(|| "surface".into()),
        weights: raw.weights,
        curvature: raw.curvature,
        laplacian,
        genus: raw.genus,
        cusps: raw.cusps,
        tolerance: raw.tolerance,
        complete: raw.complete,
    })?;
    let gauss_bonnet = if surface.is_complete() { Some(gauss_bonnet(&surface)?) } else { None };
    let report =
        LoadReport { sites: n, edges, euler_char: surface.euler_char(), max_asymmetry, asymmetric_pairs, gauss_bonnet };
    Ok(LoadedSurface { surface, report })
}

pub fn load_surface(path: impl AsRef<Path>) -> Result<LoadedSurface> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_surface(&text)
}

pub fn surface_to_json(surf: &DiscreteSurface) -> Result<String> {
    let raw = SurfaceJson {
        name: Some(surf.name().to_string()),
        sites: surf.sites(),
        weights: surf.weights().to_vec(),
        laplacian: LaplacianJson { format: "triplets".into(), entries: surf.laplacian().triplets() },
        curvature: surf.curvature().to_vec(),
        genus: surf.genus(),
        cusps: surf.cusps().to_vec(),
        tolerance: surf.tolerance(),
        complete: surf.is_complete(),
    };
    json_string(&raw)
}

pub fn save_surface(surf: &DiscreteSurface, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, surface_to_json(surf)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_cusp_grid;

    const TINY: &str = r#"{
        "sites": 3, "weights": [1.0, 2.0, 1.0], "curvature": [0.0, 0.0, 0.0], "genus": 1,
        "laplacian": {"format": "triplets", "entries": [[0,0,1.0],[0,1,-1.0],[1,0,-1.0],[1,1,2.0],[1,2,-1.0],[2,1,-1.0],[2,2,1.0]]},
        "tolerance": 1e-9
    }"#;

    #[test]
    fn loads_a_flat_torus_sample() {
        let l = parse_surface(TINY).unwrap();
        assert_eq!(l.surface.euler_char(), 0);
        assert_eq!(l.report.gauss_bonnet.unwrap().integral, 0.0);
        assert_eq!(l.report.edges, 2);
        assert_eq!(l.report.asymmetric_pairs, 0);
    }

    #[test]
    fn negative_weight_names_its_invariant() {
        let bad = TINY.replace("[1.0, 2.0, 1.0]", "[1.0, -2.0, 1.0]");
        match parse_surface(&bad) {
            Err(Error::Load { invariant, .. }) => assert_eq!(invariant, "weights.positive"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn row_sums_must_vanish() {
        let bad = TINY.replace("[1,1,2.0]", "[1,1,2.5]");
        match parse_surface(&bad) {
            Err(Error::Load { invariant, .. }) => assert_eq!(invariant, "laplacian.constant_kernel"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetry_is_reported_and_symmetrized() {
        let skew = TINY
            .replace("[1,0,-1.0]", "[1,0,-1.0000001]")
            .replace("[1,1,2.0]", "[1,1,2.00000005]")
            .replace("[0,0,1.0]", "[0,0,1.00000005]");
        let l = parse_surface(&skew).unwrap();
        assert_eq!(l.report.asymmetric_pairs, 1);
        assert!(l.report.max_asymmetry > 9e-8);
    }

    #[test]
    fn gauss_bonnet_violation_is_a_load_error() {
        let bad = TINY.replace("\"curvature\": [0.0, 0.0, 0.0]", "\"curvature\": [0.1, 0.0, 0.0]");
        match parse_surface(&bad) {
            Err(Error::Load { invariant, .. }) => assert_eq!(invariant, "gauss_bonnet"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn garbage_is_a_schema_error() {
        assert!(matches!(parse_surface("{\"sites\": 2}"), Err(Error::Load { .. })));
        assert!(matches!(parse_surface("not json"), Err(Error::Load { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let s = build_cusp_grid(1.0, 6.0, 9, 5).unwrap();
        let text = surface_to_json(&s).unwrap();
        let back = parse_surface(&text).unwrap().surface;
        assert_eq!(back.weights(), s.weights());
        assert_eq!(back.curvature(), s.curvature());
        assert_eq!(back.laplacian().edges(), s.laplacian().edges());
        assert_eq!(back.cusps(), s.cusps());
        assert!(!back.is_complete());
        assert_eq!(surface_to_json(&back).unwrap(), text);
    }
}
