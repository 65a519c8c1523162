//! Decay of a uniform cleaning scalar on a periodic box: the per-step factor against
//! `exp(-alpha ch dt / dh)` for a few values of alpha.
//!
//! cargo run --release --example glm_damping -- [steps]

use mrmhd::evolution::{evolve_step, EvolutionParams};
use mrmhd::mesh::{AdaptiveMesh, Boundary, Domain};
use mrmhd::state::primitive_to_conserved;
use mrmhd::{GasGamma, PrimitiveState};

fn main() -> mrmhd::Result<()> {
    let steps: usize = std::env::args().nth(1).map_or(5, |s| s.parse().expect("steps"));
    let gamma = GasGamma::default();
    let mut w = PrimitiveState::new(1.0, 1.0, [0.0; 3], [0.5, 0.3, 0.2]);
    w.psi = 0.37;
    let u = primitive_to_conserved(&w, gamma)?;
    for alpha in [0.0, 0.2, 0.4, 0.8] {
        let mut mesh = AdaptiveMesh::uniform(Domain::cube(0.0, 1.0)?, 3, Boundary::Periodic, 3, |_| u)?;
        let dh = mesh.min_spacing();
        let params = EvolutionParams::new(gamma, 0.3, alpha, 1.0)?;
        let mut psi = w.psi;
        println!("alpha = {alpha}");
        for _ in 0..steps {
            let (next, r) = evolve_step(mesh, &params, f64::INFINITY)?;
            mesh = next;
            let expected = (-alpha * r.ch * r.dt / dh).exp();
            println!("  psi {:.6e}  factor {:.12}  expected {:.12}", r.max_psi, r.max_psi / psi, expected);
            psi = r.max_psi;
        }
    }
    Ok(())
}
