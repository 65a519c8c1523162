//! Multiresolution analysis of a field with a sharp bump: detail magnitudes per level,
//! leaves kept for a range of thresholds, and the exactness of the transform pair.
//!
//! cargo run --release --example mr_transform -- [level]

use mrmhd::mesh::{
    inverse_mr_transform, mr_transform, threshold, threshold_value, AdaptiveMesh, Boundary, Domain, ThresholdPolicy,
};
use mrmhd::state::RHO;
use mrmhd::ConservedState;

fn main() -> mrmhd::Result<()> {
    let level: u8 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("level"));
    let domain = Domain::cube(0.0, 1.0)?;
    let mesh = AdaptiveMesh::uniform(domain, level, Boundary::ZeroGradient, level, |g| {
        let r2: f64 = (0..3).map(|k| (g.center[k] - 0.4).powi(2)).sum();
        let mut s = ConservedState::ZERO;
        s[RHO] = 1.0 + (-r2 / 0.004).exp();
        s[1] = 2.5;
        s
    })?;
    let dec = mr_transform(&mesh);
    println!("level  parents  max |d_rho|");
    for (l, details) in dec.details.iter().enumerate() {
        let max = details.values().map(|d| d.max_abs(RHO)).fold(0.0f64, f64::max);
        println!("{l:>5}  {:>7}  {max:.3e}", details.len());
    }

    println!("\neps0      eps at level L-1  leaves  fraction  max |error|");
    for eps0 in [0.0, 1e-3, 1e-2, 1e-1, 1.0] {
        let policy = ThresholdPolicy::new(eps0, domain.volume(), level)?;
        let kept = inverse_mr_transform(&threshold(&dec, &policy)?)?;
        // compare leaf averages with the projection of the full field onto them
        let mut err = 0.0f64;
        for (slot, c) in kept.leaves().iter().enumerate() {
            let exact = exact_average(&mesh, c.level, c.i);
            err = err.max((kept.leaf_state(slot)[RHO] - exact).abs());
        }
        println!(
            "{eps0:<8}  {:<16.3e}  {:>6}  {:>7.2}%  {err:.3e}",
            threshold_value(&policy, level - 1)?,
            kept.leaf_count(),
            kept.leaf_fraction()
        );
    }

    let back = inverse_mr_transform(&dec)?;
    let worst = back
        .leaf_states()
        .iter()
        .zip(mesh.leaf_states())
        .map(|(a, b)| (*a - b).max_abs())
        .fold(0.0f64, f64::max);
    println!("\nround trip without thresholding: max deviation {worst:.3e}");
    Ok(())
}

/// Mean density of the finest cells covered by the cell `(level, i)`.
fn exact_average(fine: &AdaptiveMesh, level: u8, i: [u32; 3]) -> f64 {
    let s = 1u32 << (fine.max_level() - level);
    let mut sum = 0.0;
    for dz in 0..s {
        for dy in 0..s {
            for dx in 0..s {
                let c = mrmhd::mesh::CellIndex::new(fine.max_level(), [i[0] * s + dx, i[1] * s + dy, i[2] * s + dz]);
                sum += fine.get(&c).expect("uniform mesh cell").state[RHO];
            }
        }
    }
    sum / f64::from(s * s * s)
}
