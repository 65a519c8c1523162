//! HLLD wave fan for random face states: speeds, intermediate densities and the cases
//! in which the solver falls back to HLL.
//!
//! cargo run --release --example hlld_fan -- [pairs] [seed]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mrmhd::flux::{hlld_fan, hlld_flux, FacePair};
use mrmhd::state::{conserved_to_primitive, primitive_to_conserved, RHO};
use mrmhd::{Direction, GasGamma, PrimitiveState};

fn random_primitive(rng: &mut StdRng) -> PrimitiveState {
    PrimitiveState::new(
        rng.random_range(0.05..5.0),
        rng.random_range(0.05..5.0),
        std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
        std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
    )
}

fn main() -> mrmhd::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs: usize = args.first().map_or(10_000, |s| s.parse().expect("pairs"));
    let seed: u64 = args.get(1).map_or(8, |s| s.parse().expect("seed"));
    let g = GasGamma::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut fallbacks = 0;
    for _ in 0..pairs {
        let n = rng.random_range(0..3usize);
        let d = Direction::from_axis(n);
        let ch = rng.random_range(0.5..5.0);
        let (mut wl, mut wr) = (random_primitive(&mut rng), random_primitive(&mut rng));
        let bn = 0.5 * (wl.b[n] + wr.b[n]);
        wl.b[n] = bn;
        wr.b[n] = bn;
        let pair = FacePair {
            left: primitive_to_conserved(&wl, g)?,
            right: primitive_to_conserved(&wr, g)?,
            direction: d,
        };
        let Some(fan) = hlld_fan(&pair, g)? else { continue };
        if fan.is_ordered() {
            continue;
        }
        fallbacks += 1;
        let f = hlld_flux(&pair, g, ch)?;
        println!("left  {:?}\nright {:?}", conserved_to_primitive(&pair.left, g)?, conserved_to_primitive(&pair.right, g)?);
        println!(
            "  SL {:.6} SL* {:.6} SM {:.6} SR* {:.6} SR {:.6}  rho* {:.4} {:.4}  fallback {}",
            fan.sl, fan.sl_star, fan.sm, fan.sr_star, fan.sr, fan.ul_star[RHO], fan.ur_star[RHO], f.hll_fallback
        );
    }
    println!("{fallbacks} of {pairs} pairs had an unordered fan");
    Ok(())
}
