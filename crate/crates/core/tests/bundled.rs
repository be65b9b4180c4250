use cusp_spectra::surface::io::{load_surface, surface_to_json};
use cusp_spectra::surface::synthetic::{bundled, BUNDLED};
use std::path::Path;

#[test]
fn data_files_match_their_generators() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for name in BUNDLED {
        let path = dir.join(format!("{name}.json"));
        let on_disk = std::fs::read_to_string(&path).unwrap();
        let fresh = surface_to_json(&bundled(name).unwrap()).unwrap();
        assert!(on_disk == fresh, "{name}.json is stale; rerun the generate_surfaces example");
        let loaded = load_surface(&path).unwrap();
        assert_eq!(loaded.report.asymmetric_pairs, 0);
        assert!(loaded.report.gauss_bonnet.unwrap().passed);
        assert_eq!(loaded.surface.name(), name);
    }
}

#[test]
fn unknown_bundled_name() {
    assert!(bundled("sphere").is_err());
}
