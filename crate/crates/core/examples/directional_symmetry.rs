//! The shock tube run along x, y and z. Rotating the axes and vector components of one
//! run must reproduce the others cell by cell, mesh included.
//!
//! cargo run --release --example directional_symmetry -- [level] [eps0]

use mrmhd::cases::{build_initial_mesh, permutation_check, BzVariant, RiemannSpec1D};
use mrmhd::evolution::{run, EvolutionParams};
use mrmhd::mesh::{AdaptiveMesh, Boundary, VariableScaling};
use mrmhd::{Direction, GasGamma};

fn tube(axis: Direction, level: u8, eps0: f64) -> mrmhd::Result<AdaptiveMesh> {
    let gamma = GasGamma::default();
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, axis);
    let (mesh, policy) =
        build_initial_mesh(&spec, gamma, level, Boundary::ZeroGradient, Some(eps0), VariableScaling::PerVariable, 3)?;
    let mut params = EvolutionParams::new(gamma, 0.3, 0.4, 0.1)?;
    params.policy = policy;
    let out = run(mesh, &params)?;
    println!("{axis:?}: {} steps, {} leaves", out.reports.len(), out.mesh.leaf_count());
    Ok(out.mesh)
}

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let level: u8 = args.first().map_or(4, |s| s.parse().expect("level"));
    let eps0: f64 = args.get(1).map_or(0.1, |s| s.parse().expect("eps0"));
    let x = tube(Direction::X, level, eps0)?;
    let y = tube(Direction::Y, level, eps0)?;
    let z = tube(Direction::Z, level, eps0)?;
    println!("max |x rotated - y| = {:.3e}", permutation_check(&x, &y, 1)?);
    println!("max |x rotated - z| = {:.3e}", permutation_check(&x, &z, 2)?);
    println!("max |y rotated - z| = {:.3e}", permutation_check(&y, &z, 1)?);
    Ok(())
}
