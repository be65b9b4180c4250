//! Total curvature of each bundled surface before and after random conformal
//! changes.

use cusp_spectra::surface::synthetic::{bundled, random_decaying_factor, BUNDLED};
use cusp_spectra::surface::{conformal_transform, gauss_bonnet};
use std::f64::consts::PI;

fn main() -> cusp_spectra::Result<()> {
    for name in BUNDLED {
        let surf = bundled(name)?;
        let base = gauss_bonnet(&surf)?;
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let phi = random_decaying_factor(&surf, seed, 0.5, 2.0);
            let h = conformal_transform(&surf, &phi)?;
            worst = worst.max((gauss_bonnet(&h)?.integral - base.integral).abs());
        }
        println!(
            "{name:<18} chi = {:>2}  integral/2pi = {:+.12}  max change over 20 factors = {worst:.1e}",
            surf.euler_char(),
            base.integral / (2.0 * PI)
        );
    }
    Ok(())
}
