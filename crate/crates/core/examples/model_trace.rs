//! Closed-form relative trace of the model cusp pair against direct
//! integration of the heat kernel difference.

use cusp_spectra::cusp_model::{relative_trace_exact, relative_trace_quadrature, ModelCuspPair, TraceDomain};
use cusp_spectra::trace_expansion::geometric_grid;
use std::f64::consts::E;

fn main() -> cusp_spectra::Result<()> {
    let grid = geometric_grid(0.01, 10.0, 40);
    for domain in [TraceDomain::FullHalfLine, TraceDomain::Restricted] {
        println!("{domain:?}");
        for a in [1.5, 2.0, E, 4.0] {
            let pair = ModelCuspPair::new(a, domain)?;
            let mut worst = 0.0f64;
            for &t in &grid {
                let exact = relative_trace_exact(&pair, t)?;
                let quad = relative_trace_quadrature(&pair, t, 1e-12)?;
                worst = worst.max((exact - quad).abs() / exact.abs());
            }
            let at = |t| relative_trace_exact(&pair, t);
            println!(
                "  a = {a:.4}  R(0.01) = {:+.10}  R(10) = {:+.10}  max rel diff = {worst:.1e}",
                at(0.01)?,
                at(10.0)?
            );
        }
    }

    // small-time limit of the restricted trace
    let pair = ModelCuspPair::new(2.0, TraceDomain::Restricted)?;
    for t in [1e-2, 1e-4, 1e-6] {
        println!("restricted a = 2, t = {t:.0e}: R = {:.12}", relative_trace_exact(&pair, t)?);
    }
    Ok(())
}
