//! Four-quadrant Riemann problem in a coordinate plane. Writes a density/pressure slice
//! through the mid-plane and a map of the finest leaf level over the plane.
//!
//! cargo run --release --example riemann2d -- [level] [eps0] [plane xy|yz|zx] [output dir]

use std::path::PathBuf;
use std::time::Instant;

use mrmhd::cases::{build_initial_mesh, compression_stats, Plane, RiemannSpec2D};
use mrmhd::evolution::{run, EvolutionParams};
use mrmhd::mesh::{Boundary, VariableScaling};
use mrmhd::output::{emit_mesh_projection, emit_slice, mesh_projection, Projection};
use mrmhd::GasGamma;

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let level: u8 = args.first().map_or(5, |s| s.parse().expect("level"));
    let eps0: f64 = args.get(1).map_or(0.08, |s| s.parse().expect("eps0"));
    let plane = args.get(2).map_or(Plane::XY, |s| Plane::parse(s).expect("plane"));
    let dir = args.get(3).map_or_else(|| PathBuf::from("riemann2d_out"), PathBuf::from);
    std::fs::create_dir_all(&dir).expect("create output directory");

    let gamma = GasGamma::default();
    let spec = RiemannSpec2D::quadrants(plane);
    let (mesh, policy) =
        build_initial_mesh(&spec, gamma, level, Boundary::ZeroGradient, Some(eps0), VariableScaling::PerVariable, 3)?;
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

    let header = vec![format!("four-quadrant problem, level {level}, eps0 {eps0}, t = 0.1")];
    let vars = ["rho".to_string(), "p".to_string()];
    emit_slice(&out.mesh, gamma, plane, 0.0, &vars, &dir.join("slice.csv"), &header)?;
    emit_mesh_projection(&out.mesh, Projection::Plane(plane), &dir.join("levels.csv"), &header)?;

    // coarse text rendering of the finest level per column
    let n = 1usize << level;
    let levels = mesh_projection(&out.mesh, Projection::Plane(plane));
    let stride = (n / 32).max(1);
    for b in (0..n).step_by(stride).rev() {
        let row: String = (0..n).step_by(stride).map(|a| char::from(b'0' + levels[b * n + a])).collect();
        println!("{row}");
    }
    println!("slice and level map written to {}", dir.display());
    Ok(())
}
