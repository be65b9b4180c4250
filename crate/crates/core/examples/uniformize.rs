//! Uniformize a perturbed hyperbolic surface.
//!
//! cargo run --release --example uniformize -- [closed|cusped] [side] [gradient|preconditioned]

use cusp_spectra::polyakov::{curvature_constancy, minimize_ops, MinimizeOptions, StepRule};
use cusp_spectra::surface::synthetic::{cusped_surface, hyperbolic_closed, random_decaying_factor, CuspedSpec};
use std::time::Instant;

fn main() -> cusp_spectra::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map_or("closed", String::as_str);
    let side: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let rule = match args.get(2).map(String::as_str) {
        Some("preconditioned") => StepRule::Preconditioned,
        _ => StepRule::Gradient,
    };

    let surf = match kind {
        "cusped" => cusped_surface(&CuspedSpec {
            genus: 2,
            cusps: 1,
            core_u: side,
            core_v: side,
            n_x: side / 4,
            n_y: 40,
            ..CuspedSpec::default()
        })?,
        _ => hyperbolic_closed(2, side, side)?,
    };
    let phi0 = random_decaying_factor(&surf, 11, 0.3, 2.0);
    println!("{}: {} sites, chi = {}", surf.name(), surf.sites(), surf.euler_char());
    let before = curvature_constancy(&surf, &phi0.values)?;
    println!("start: mean K = {:.6}, relative stddev = {:.3e}", before.mean, before.relative_stddev);

    let opts =
        MinimizeOptions { step_rule: rule, max_iter: 20_000, area_normalization: true, ..MinimizeOptions::default() };
    let clock = Instant::now();
    let report = minimize_ops(&surf, &phi0, &opts)?;
    println!(
        "{:?}: converged = {} after {} iterations in {:.2?}, |r| = {:.2e}",
        report.step_rule,
        report.converged,
        report.iterations,
        clock.elapsed(),
        report.final_gradient_norm
    );
    println!(
        "mean K = {:.9} (target {:.9}), relative stddev = {:.3e}, area = {:.9}",
        report.curvature_mean, report.target, report.curvature_relative_stddev, report.area
    );
    Ok(())
}
