//! Conformal change of the log-determinant on a cusped surface: cocycle
//! residual under refinement and the first variation.

use cusp_spectra::polyakov::{cocycle_check, polyakov_delta, polyakov_directional};
use cusp_spectra::surface::synthetic::{cusped_surface, random_decaying_factor, CuspedSpec};
use cusp_spectra::surface::ConformalFactor;

fn main() -> cusp_spectra::Result<()> {
    let spec = CuspedSpec::default();
    for spec in [spec, spec.refined()] {
        let surf = cusped_surface(&spec)?;
        let phi = random_decaying_factor(&surf, 1, 0.3, 2.0);
        let psi = random_decaying_factor(&surf, 2, 0.3, 2.0);
        let d = polyakov_delta(&surf, &phi)?;
        let c = cocycle_check(&surf, &phi, &psi)?;
        println!(
            "{} sites: F(g, phi) = {:+.12} (energy {:+.6}, curvature {:+.6}, area {:+.6})",
            surf.sites(),
            d.total,
            d.energy_term,
            d.curvature_term,
            d.area_term
        );
        println!("  cocycle residual {:.2e} on terms of size {:.2e}", c.residual, c.scale);
    }

    let surf = cusped_surface(&spec)?;
    let phi = random_decaying_factor(&surf, 3, 0.3, 2.0);
    let psi = random_decaying_factor(&surf, 4, 0.3, 2.0);
    let analytic = polyakov_directional(&surf, &phi, &psi)?;
    let eps = 1e-5;
    let shifted = |s: f64| -> cusp_spectra::Result<f64> {
        let v = phi.values.iter().zip(&psi.values).map(|(a, b)| a + s * b).collect();
        Ok(polyakov_delta(&surf, &ConformalFactor::new(v, phi.decay_order, phi.decay_bound + eps * psi.decay_bound))?
            .total)
    };
    let fd = (shifted(eps)? - shifted(-eps)?) / (2.0 * eps);
    println!("directional derivative {analytic:+.12}, central difference {fd:+.12}");
    Ok(())
}
