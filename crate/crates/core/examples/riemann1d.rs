//! Magnetized shock tube along one axis on the adaptive mesh.
//!
//! cargo run --release --example riemann1d -- [level] [eps0] [axis x|y|z] [scaling]

use std::time::Instant;

use mrmhd::cases::{
    build_initial_mesh, compression_stats, error_norms, load_reference, sample_mesh, BzVariant, RiemannSpec1D,
    Sampling,
};
use mrmhd::evolution::{run, EvolutionParams};
use mrmhd::mesh::{Boundary, VariableScaling};
use mrmhd::{Direction, GasGamma};

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let level: u8 = args.first().map_or(5, |s| s.parse().expect("level"));
    let eps0: f64 = args.get(1).map_or(0.1, |s| s.parse().expect("eps0"));
    let axis = match args.get(2).map(String::as_str) {
        Some("y") => Direction::Y,
        Some("z") => Direction::Z,
        _ => Direction::X,
    };
    let scaling = args
        .get(3)
        .map_or(VariableScaling::PerVariable, |s| VariableScaling::parse(s).expect("scaling"));
    let gamma = GasGamma::default();
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, axis);
    let (mesh, policy) =
        build_initial_mesh(&spec, gamma, level, Boundary::ZeroGradient, Some(eps0), scaling, 3)?;
    println!("initial leaves: {} ({:.2}%)", mesh.leaf_count(), mesh.leaf_fraction());
    let mut params = EvolutionParams::new(gamma, 0.3, 0.4, 0.1)?;
    params.policy = policy;
    let start = Instant::now();
    let out = run(mesh, &params)?;
    let stats = compression_stats(&out.reports)?;
    println!(
        "{} steps in {:.1} s, leaf fraction mean {:.2}% final {:.2}%",
        out.reports.len(),
        start.elapsed().as_secs_f64(),
        stats.mean,
        stats.last
    );
    let reference = concat!(env!("CARGO_MANIFEST_DIR"), "/data/riemann1d_reference_literature.csv");
    if let Ok(r) = load_reference(std::path::Path::new(reference)) {
        let samples = sample_mesh(&out.mesh, gamma, Sampling::FullGrid(level));
        let report = error_norms(&samples, &r, axis)?;
        print!("{}", report.to_csv());
    }
    Ok(())
}
