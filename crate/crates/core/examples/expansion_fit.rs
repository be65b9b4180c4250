//! Recover small-time expansion coefficients from noisy-free samples with an
//! injected `t^{3/2}` remainder.

use cusp_spectra::trace_expansion::{
    eval_expansion, expansion_from_geometry, fit_expansion, geometric_grid, FitOptions,
};
use std::f64::consts::PI;

fn main() -> cusp_spectra::Result<()> {
    // area 4π, χ = −1, one cusp
    let truth = expansion_from_geometry(4.0 * PI, -1, 1)?;
    let samples: Vec<(f64, f64)> = geometric_grid(1e-4, 1e-1, 40)
        .into_iter()
        .map(|t| Ok((t, eval_expansion(&truth, t)? + 0.3 * t.powf(1.5))))
        .collect::<cusp_spectra::Result<_>>()?;

    let report = fit_expansion(&samples, FitOptions::default())?;
    println!("{:>5} {:>14} {:>14}", "", "true", "fitted");
    for (name, a, b) in [
        ("a0", truth.a0, report.coeffs.a0),
        ("a10", truth.a10, report.coeffs.a10),
        ("a11", truth.a11, report.coeffs.a11),
        ("a2", truth.a2, report.coeffs.a2),
    ] {
        println!("{name:>5} {a:>14.9} {b:>14.9}");
    }
    println!("max coefficient error {:.2e}", report.max_coeff_error(&truth));
    println!("remainder terms {:?}", report.remainder_coeffs);
    println!("condition {:.2e}, max residual {:.2e}", report.condition, report.max_residual);
    Ok(())
}
