//! Write the bundled surfaces to `data/` (or the directory given).
//!
//! cargo run --example generate_surfaces -- [dir]

use cusp_spectra::surface::gauss_bonnet;
use cusp_spectra::surface::io::save_surface;
use cusp_spectra::surface::synthetic::{bundled, BUNDLED};
use std::path::PathBuf;

fn main() -> cusp_spectra::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;
    for name in BUNDLED {
        let surf = bundled(name)?;
        let path = dir.join(format!("{name}.json"));
        save_surface(&surf, &path)?;
        let gb = gauss_bonnet(&surf)?;
        println!(
            "{:<20} {:>5} sites  chi = {:>2}  area = {:.6}  GB residual = {:.1e}",
            name,
            surf.sites(),
            surf.euler_char(),
            surf.area(),
            gb.residual
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}
