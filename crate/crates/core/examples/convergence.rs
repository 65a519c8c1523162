//! Observed order of accuracy on the smooth periodic entropy wave.
//!
//! cargo run --release --example convergence -- [t_end] [finest level]

use mrmhd::cases::{build_initial_mesh, SmoothAdvection};
use mrmhd::evolution::{run, EvolutionParams};
use mrmhd::mesh::{Boundary, VariableScaling};
use mrmhd::GasGamma;

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t_end: f64 = args.first().map_or(0.1, |s| s.parse().expect("t_end"));
    let finest: u8 = args.get(1).map_or(5, |s| s.parse().expect("level"));
    let gamma = GasGamma::default();
    let wave = SmoothAdvection::default();
    let exact = wave.at_time(t_end);
    let mut prev: Option<f64> = None;
    println!("level,steps,L1_rho,order");
    for level in 3..=finest {
        let (mesh, _) = build_initial_mesh(&wave, gamma, level, Boundary::Periodic, None, VariableScaling::None, level)?;
        let out = run(mesh, &EvolutionParams::new(gamma, 0.3, 0.4, t_end)?)?;
        let m = &out.mesh;
        let mut l1 = 0.0;
        for (slot, c) in m.leaves().iter().enumerate() {
            let g = m.geometry(c);
            l1 += (m.leaf_state(slot).rho() - exact.density_average(&g)).abs() * g.volume();
        }
        let l1 = l1 / m.domain().volume();
        let order = prev.map_or(String::new(), |p| format!("{:.3}", (p / l1).log2()));
        println!("{level},{},{l1:.6e},{order}", out.reports.len());
        prev = Some(l1);
    }
    Ok(())
}
