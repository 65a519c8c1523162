//! Writes high-resolution 1D shock-tube profiles computed with the uniform solver,
//! one per out-of-plane field variant.
//!
//! cargo run --release --example generate_reference -- [cells] [output dir]

use std::path::PathBuf;
use std::time::Instant;

use mrmhd::cases::{numerical_reference, BzVariant};
use mrmhd::GasGamma;

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cells: usize = args.first().map_or(8192, |s| s.parse().expect("cell count"));
    let dir = args
        .get(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")));
    for variant in [BzVariant::Literature, BzVariant::AsPrinted] {
        let start = Instant::now();
        let r = numerical_reference(variant, GasGamma::default(), 0.3, 0.4, 0.1, cells)?;
        let path = dir.join(format!("riemann1d_reference_{}.csv", variant.name().replace('-', "_")));
        let header = [
            format!("magnetized shock tube, Bz variant {}, t = 0.1", variant.name()),
            format!("uniform MC-HLLD-GLM run with {cells} cells, nu = 0.3, alpha = 0.4, gamma = 5/3"),
        ];
        r.write_profile(&path, &header)?;
        println!("{} ({:.1} s)", path.display(), start.elapsed().as_secs_f64());
    }
    Ok(())
}
