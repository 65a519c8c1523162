//! Acceptance gate. Every criterion prints one PASS/FAIL line; the process fails if
//! any criterion fails. The level-8 and four-quadrant runs are skipped unless `--include-ignored`
//! or `--ignored` is passed (`cargo test --test acceptance -- --include-ignored`).

use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mrmhd::cases::{
    build_initial_mesh, compression_stats, error_norms, error_norms_between, load_reference, permutation_check,
    sample_mesh, BzVariant, RiemannSpec1D, RiemannSpec2D, Plane, Sampling, SmoothAdvection,
};
use mrmhd::evolution::{conservation_drift, evolve_step, run, EvolutionParams, RunOutcome};
use mrmhd::flux::{hlld_fan, hlld_flux, FacePair, SchemeOptions};
use mrmhd::mesh::{
    adapt, inverse_mr_transform, mr_transform, threshold_value, AdaptiveMesh, Boundary, Domain, ThresholdPolicy,
    VariableScaling,
};
use mrmhd::state::{physical_flux, primitive_to_conserved, ENERGY, MAG, MOM, RHO};
use mrmhd::uniform::UniformGrid;
use mrmhd::{ConservedState, Direction, GasGamma, PrimitiveState};

const NU: f64 = 0.3;
const ALPHA: f64 = 0.4;
const T_END: f64 = 0.1;
const EPS0: f64 = 0.1;
/// Published rho L1 error of the level-8 run (eps0 = 0.1) against the exact solution.
const PUBLISHED_RHO_L1: f64 = 4.5597e-3;

type Outcome = std::result::Result<(bool, String), String>;

fn gamma() -> GasGamma {
    GasGamma::default()
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, id: &str, title: &str, out: Outcome, start: Instant) {
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            self.failed += 1;
        }
        println!(
            "criterion {id:>3} {}: {title}: {detail} [{secs:.1} s]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

struct ShockRun {
    initial: AdaptiveMesh,
    out: RunOutcome,
}

fn shock_tube(level: u8, axis: Direction) -> mrmhd::Result<ShockRun> {
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, axis);
    let (initial, policy) = build_initial_mesh(
        &spec,
        gamma(),
        level,
        Boundary::ZeroGradient,
        Some(EPS0),
        VariableScaling::PerVariable,
        3,
    )?;
    let mut params = EvolutionParams::new(gamma(), NU, ALPHA, T_END)?;
    params.policy = policy;
    let out = run(initial.clone(), &params)?;
    Ok(ShockRun { initial, out })
}

fn criterion_1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let domain = Domain::cube(0.0, 1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut fractions = Vec::new();
    for _ in 0..6 {
        // random spikes on a smooth background give a random graded tree
        let spikes: Vec<([f64; 3], f64)> = (0..4)
            .map(|_| (std::array::from_fn(|_| rng.random::<f64>()), rng.random_range(0.5..2.0)))
            .collect();
        let mut mesh = AdaptiveMesh::uniform(domain, 4, Boundary::ZeroGradient, 4, |g| {
            let mut s = ConservedState::ZERO;
            let bump: f64 = spikes
                .iter()
                .map(|(p, a)| {
                    let r2: f64 = (0..3).map(|k| (g.center[k] - p[k]).powi(2)).sum();
                    a * (-r2 / 0.005).exp()
                })
                .sum();
            for v in 0..9 {
                s[v] = 1.0 + 0.1 * v as f64 + bump;
            }
            s
        })
        .map_err(|e| e.to_string())?;
        let policy = ThresholdPolicy::new(0.5, 1.0, 4).map_err(|e| e.to_string())?;
        mesh = adapt(&mesh, &policy).map_err(|e| e.to_string())?;
        mesh.map_leaves(|_, _, _| {
            let mut s = ConservedState::ZERO;
            for v in 0..9 {
                s[v] = rng.random_range(-2.0..2.0);
            }
            s
        });
        fractions.push(mesh.leaf_fraction());
        let back = inverse_mr_transform(&mr_transform(&mesh)).map_err(|e| e.to_string())?;
        if back.leaves() != mesh.leaves() {
            return Ok((false, "leaf set changed".into()));
        }
        for (a, b) in back.leaf_states().iter().zip(mesh.leaf_states()) {
            worst = worst.max((*a - b).max_abs());
        }
    }
    Ok((
        worst <= 1e-13,
        format!(
            "max leaf deviation {worst:.3e} <= 1e-13 over 6 random trees (leaf fractions {})",
            fractions.iter().map(|f| format!("{f:.1}%")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn criterion_2() -> Outcome {
    let g = gamma();
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, Direction::X);
    let (mut mesh, policy) =
        build_initial_mesh(&spec, g, 4, Boundary::ZeroGradient, Some(0.0), VariableScaling::PerVariable, 3)
            .map_err(|e| e.to_string())?;
    let mut params = EvolutionParams::new(g, NU, ALPHA, 1.0).map_err(|e| e.to_string())?;
    params.policy = policy;
    let mut grid = UniformGrid::new([16; 3], spec.domain, Boundary::ZeroGradient, |c| {
        mrmhd::cases::InitialCondition::cell_average(&spec, c, g)
    })
    .map_err(|e| e.to_string())?;
    let scheme = SchemeOptions::default();
    let mut dt_gap = 0.0f64;
    for _ in 0..10 {
        let (next, report) = evolve_step(mesh, &params, f64::INFINITY).map_err(|e| e.to_string())?;
        mesh = next;
        let (dt, _) = grid.step_size(NU, g).map_err(|e| e.to_string())?;
        dt_gap = dt_gap.max(((dt - report.dt) / dt).abs());
        grid.rk2_step(report.dt, report.ch, NU, ALPHA, g, &scheme).map_err(|e| e.to_string())?;
    }
    if mesh.leaf_count() != 4096 {
        return Ok((false, format!("adaptive mesh has {} leaves, expected 4096", mesh.leaf_count())));
    }
    let mut worst = 0.0f64;
    for (slot, c) in mesh.leaves().iter().enumerate() {
        let u = grid.cells[grid.index(c.i[0] as usize, c.i[1] as usize, c.i[2] as usize)];
        worst = worst.max((*mesh.leaf_state(slot) - u).max_abs());
    }
    Ok((
        worst <= 1e-12,
        format!("max per-cell difference {worst:.3e} <= 1e-12 after 10 steps (independent CFL steps agree to {dt_gap:.1e})"),
    ))
}

fn criterion_3(x: &ShockRun, y: &ShockRun, z: &ShockRun) -> Outcome {
    let dy = permutation_check(&x.out.mesh, &y.out.mesh, 1).map_err(|e| e.to_string())?;
    let dz = permutation_check(&x.out.mesh, &z.out.mesh, 2).map_err(|e| e.to_string())?;
    let dyz = permutation_check(&y.out.mesh, &z.out.mesh, 1).map_err(|e| e.to_string())?;
    let worst = dy.max(dz).max(dyz);
    Ok((
        worst <= 1e-10,
        format!("max permuted discrepancy x/y {dy:.3e}, x/z {dz:.3e}, y/z {dyz:.3e} <= 1e-10"),
    ))
}

fn criterion_4(runs: &[(u8, &ShockRun)]) -> Outcome {
    let path = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/riemann1d_reference_literature.csv"));
    let reference = load_reference(path).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    for (level, r) in runs {
        let samples = sample_mesh(&r.out.mesh, gamma(), Sampling::FullGrid(*level));
        let report = error_norms(&samples, &reference, Direction::X).map_err(|e| e.to_string())?;
        errors.push((*level, report.get("rho").unwrap().l1));
    }
    let monotone = errors.windows(2).all(|w| w[1].1 < w[0].1);
    let last = errors.last().unwrap().1;
    let bound = 4.0 * PUBLISHED_RHO_L1;
    Ok((
        monotone && last <= bound,
        format!(
            "rho L1 {} (decreasing: {monotone}), L=6 value {last:.4e} <= {bound:.4e}",
            errors.iter().map(|(l, e)| format!("L={l} {e:.4e}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn criterion_5(x: &ShockRun) -> Outcome {
    let bx0 = RiemannSpec1D::shock_tube(BzVariant::Literature, Direction::X).left.b[0];
    let dev = x
        .out
        .mesh
        .leaf_states()
        .iter()
        .map(|u| (u[MAG] - bx0).abs())
        .fold(0.0, f64::max);
    Ok((dev <= 1e-6, format!("max |Bx - Bx0| = {dev:.3e} <= 1e-6 at L=5")))
}

fn criterion_6(r: &ShockRun) -> Outcome {
    let s = compression_stats(&r.out.reports).map_err(|e| e.to_string())?;
    Ok((
        s.mean <= 60.0 && s.last <= 60.0,
        format!("L=6 leaf fraction mean {:.2}%, final {:.2}% (both <= 60%)", s.mean, s.last),
    ))
}

fn criterion_6_heavy() -> Outcome {
    let r = shock_tube(8, Direction::X).map_err(|e| e.to_string())?;
    let s1 = compression_stats(&r.out.reports).map_err(|e| e.to_string())?;
    let spec = RiemannSpec2D::quadrants(Plane::XY);
    let (mesh, policy) =
        build_initial_mesh(&spec, gamma(), 8, Boundary::ZeroGradient, Some(0.08), VariableScaling::PerVariable, 3)
            .map_err(|e| e.to_string())?;
    let mut params = EvolutionParams::new(gamma(), NU, ALPHA, T_END).map_err(|e| e.to_string())?;
    params.policy = policy;
    let out = run(mesh, &params).map_err(|e| e.to_string())?;
    let s2 = compression_stats(&out.reports).map_err(|e| e.to_string())?;
    Ok((
        (s1.mean - 32.0).abs() <= 8.0 && (s2.last - 40.8).abs() <= 8.0,
        format!(
            "L=8 1D mean {:.2}% (32 +- 8), 2D final {:.2}% (40.8 +- 8)",
            s1.mean, s2.last
        ),
    ))
}

fn criterion_7(x: &ShockRun) -> Outcome {
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, Direction::X);
    if spec.waves_reach_walls(gamma(), T_END) {
        return Ok((false, "waves reach the walls before the end time".into()));
    }
    let drift = conservation_drift(&x.initial.totals(), &x.out.reports);
    let (m, e) = (drift[RHO].abs(), drift[ENERGY].abs());
    Ok((
        m <= 1e-10 && e <= 1e-10,
        format!("relative drift mass {m:.3e}, energy {e:.3e} <= 1e-10 (net wall inflow subtracted)"),
    ))
}

fn random_primitive(rng: &mut StdRng) -> PrimitiveState {
    PrimitiveState::new(
        rng.random_range(0.05..5.0),
        rng.random_range(0.05..5.0),
        std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
        std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
    )
}

fn criterion_8() -> Outcome {
    let g = gamma();
    let mut rng = StdRng::seed_from_u64(8);
    let (mut consistency, mut mirror) = (0.0f64, 0.0f64);
    let (mut unordered, mut nonpositive, mut missing, mut fallbacks) = (0, 0, 0, 0);
    let pairs = 10_000;
    for _ in 0..pairs {
        let n = rng.random_range(0..3usize);
        let d = Direction::from_axis(n);
        let ch = rng.random_range(0.5..5.0);
        let (mut wl, mut wr) = (random_primitive(&mut rng), random_primitive(&mut rng));
        let bn = 0.5 * (wl.b[n] + wr.b[n]);
        wl.b[n] = bn;
        wr.b[n] = bn;
        let ul = primitive_to_conserved(&wl, g).map_err(|e| e.to_string())?;
        let ur = primitive_to_conserved(&wr, g).map_err(|e| e.to_string())?;

        let same = hlld_flux(&FacePair { left: ul, right: ul, direction: d }, g, ch).map_err(|e| e.to_string())?;
        let exact = physical_flux(&ul, d, g, ch).map_err(|e| e.to_string())?;
        consistency = consistency.max((same.flux - exact).max_abs() / exact.max_abs().max(1.0));

        let pair = FacePair { left: ul, right: ur, direction: d };
        let used = hlld_flux(&pair, g, ch).map_err(|e| e.to_string())?;
        if used.hll_fallback {
            fallbacks += 1;
        }
        match hlld_fan(&pair, g).map_err(|e| e.to_string())? {
            None if !used.hll_fallback => missing += 1,
            None => {}
            Some(fan) => {
                // ordering is only required of fans the solver actually uses
                if !fan.is_ordered() && !used.hll_fallback {
                    unordered += 1;
                }
                let rhos = [fan.ul_star[RHO], fan.ur_star[RHO], fan.ul_2star[RHO], fan.ur_2star[RHO]];
                if rhos.iter().any(|&r| !(r > 0.0)) {
                    nonpositive += 1;
                }
            }
        }

        let flip = |u: &ConservedState| {
            let mut m = *u;
            m[MOM + n] = -m[MOM + n];
            m[MAG + n] = -m[MAG + n];
            m
        };
        let a = used;
        let b = hlld_flux(&FacePair { left: flip(&ur), right: flip(&ul), direction: d }, g, ch)
            .map_err(|e| e.to_string())?;
        mirror = mirror.max((a.flux[RHO] + b.flux[RHO]).abs() / a.flux[RHO].abs().max(1.0));
    }
    let pass = consistency <= 1e-12 && mirror <= 1e-12 && unordered == 0 && nonpositive == 0 && missing == 0;
    Ok((
        pass,
        format!(
            "{pairs} pairs: consistency {consistency:.2e}, mirror {mirror:.2e} (<= 1e-12), \
             unordered fans used {unordered}, non-positive star densities {nonpositive}, \
             missing fans used {missing}, HLL fallbacks {fallbacks}"
        ),
    ))
}

fn criterion_9() -> Outcome {
    let g = gamma();
    let psi0 = 0.37;
    let mut w = PrimitiveState::new(1.0, 1.0, [0.0; 3], [0.5, 0.3, 0.2]);
    w.psi = psi0;
    let u = primitive_to_conserved(&w, g).map_err(|e| e.to_string())?;
    let mut mesh = AdaptiveMesh::uniform(Domain::cube(0.0, 1.0).unwrap(), 3, Boundary::Periodic, 3, |_| u)
        .map_err(|e| e.to_string())?;
    let params = EvolutionParams::new(g, NU, ALPHA, 1.0).map_err(|e| e.to_string())?;
    let dh = mesh.min_spacing();
    let mut prev = psi0;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (next, r) = evolve_step(mesh, &params, f64::INFINITY).map_err(|e| e.to_string())?;
        mesh = next;
        let expected = (-ALPHA * r.ch * r.dt / dh).exp();
        let observed = r.max_psi / prev;
        worst = worst.max((observed / expected - 1.0).abs());
        prev = r.max_psi;
    }
    Ok((
        worst <= 1e-10,
        format!("max relative deviation of the per-step decay factor {worst:.3e} <= 1e-10"),
    ))
}

fn criterion_10() -> Outcome {
    // eps^l = eps0 / |domain| * 2^(3 (l - L + 1)), worked by hand for L = 8
    let cases = [
        // shock tube: eps0 = 0.1 on [-0.5, 0.5]^3
        (0.1, 1.0, 7u8, 0.1),
        (0.1, 1.0, 6, 0.1 / 8.0),
        (0.1, 1.0, 0, 0.1 / 2097152.0),
        // four-quadrant problem: eps0 = 0.08 on [-1, 1]^3
        (0.08, 8.0, 7, 0.01),
        (0.08, 8.0, 5, 0.01 / 64.0),
        (0.08, 8.0, 0, 0.01 / 2097152.0),
    ];
    let mut worst = 0.0f64;
    for (eps0, volume, level, expected) in cases {
        let p = ThresholdPolicy::new(eps0, volume, 8).map_err(|e| e.to_string())?;
        let v = threshold_value(&p, level).map_err(|e| e.to_string())?;
        worst = worst.max(((v - expected) / expected).abs());
    }
    Ok((
        worst <= 1e-15,
        format!("{} hand-computed values reproduced, max relative difference {worst:.1e}", cases.len()),
    ))
}

fn criterion_11() -> Outcome {
    let g = gamma();
    let wave = SmoothAdvection::default();
    let exact = wave.at_time(T_END);
    let mut errors = Vec::new();
    for level in 3..=5u8 {
        let (mesh, _) = build_initial_mesh(&wave, g, level, Boundary::Periodic, None, VariableScaling::None, level)
            .map_err(|e| e.to_string())?;
        let out = run(mesh, &EvolutionParams::new(g, NU, ALPHA, T_END).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let m = &out.mesh;
        let mut l1 = 0.0;
        for (slot, c) in m.leaves().iter().enumerate() {
            let geo = m.geometry(c);
            l1 += (m.leaf_state(slot).rho() - exact.density_average(&geo)).abs() * geo.volume();
        }
        errors.push(l1 / m.domain().volume());
    }
    let order = (errors[0] / errors[2]).log2() / 2.0;
    Ok((
        order >= 1.8,
        format!(
            "rho L1 {:.3e}, {:.3e}, {:.3e} at L=3,4,5: order {order:.3} >= 1.8",
            errors[0], errors[1], errors[2]
        ),
    ))
}

fn criterion_12() -> Outcome {
    let g = gamma();
    let spec = RiemannSpec2D::quadrants(Plane::XY);
    let mut params = EvolutionParams::new(g, NU, ALPHA, T_END).map_err(|e| e.to_string())?;
    let (mesh, policy) =
        build_initial_mesh(&spec, g, 6, Boundary::ZeroGradient, Some(0.08), VariableScaling::PerVariable, 3)
            .map_err(|e| e.to_string())?;
    params.policy = policy;
    let adaptive = run(mesh, &params).map_err(|e| e.to_string())?;
    let (mesh, policy) =
        build_initial_mesh(&spec, g, 6, Boundary::ZeroGradient, Some(0.0), VariableScaling::PerVariable, 6)
            .map_err(|e| e.to_string())?;
    params.policy = policy;
    let full = run(mesh, &params).map_err(|e| e.to_string())?;
    let a = sample_mesh(&adaptive.mesh, g, Sampling::FullGrid(6));
    let b = sample_mesh(&full.mesh, g, Sampling::FullGrid(6));
    let report = error_norms_between(&a, &b).map_err(|e| e.to_string())?;
    let worst = report.rows.iter().map(|r| r.l1).fold(0.0, f64::max);
    Ok((
        worst <= 5e-3,
        format!(
            "L1 discrepancies {} (all <= 5e-3)",
            report.rows.iter().map(|r| format!("{} {:.2e}", r.name, r.l1)).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let heavy = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    // bare arguments select criteria by id, e.g. `-- --include-ignored 12`
    let filters: Vec<&str> = args.iter().filter(|a| !a.starts_with('-')).map(String::as_str).collect();
    let selected = |id: &str| filters.is_empty() || filters.contains(&id);
    let mut gate = Gate { failed: 0 };

    for (id, title, f) in [
        ("1", "multiresolution transform identity", criterion_1 as fn() -> Outcome),
        ("2", "eps0 = 0 equals the uniform solver", criterion_2),
        ("8", "HLLD property suite", criterion_8),
        ("9", "GLM damping factor", criterion_9),
        ("10", "threshold formula", criterion_10),
        ("11", "smooth-problem order", criterion_11),
    ] {
        if selected(id) {
            let t = Instant::now();
            gate.report(id, title, f(), t);
        }
    }

    if ["3", "4", "5", "6", "7"].iter().any(|id| selected(id)) {
        shock_tube_criteria(&mut gate);
    }

    for (id, title, f) in [
        ("6H", "compression at L=8", criterion_6_heavy as fn() -> Outcome),
        ("12", "four-quadrant adaptive vs eps0 = 0 at L=6", criterion_12),
    ] {
        if !selected(id) {
            continue;
        }
        if heavy {
            let t = Instant::now();
            gate.report(id, title, f(), t);
        } else {
            println!("criterion {id:>3} SKIPPED: {title} (heavy, pass --include-ignored)");
        }
    }

    if gate.failed > 0 {
        println!("{} criteria failed", gate.failed);
        std::process::exit(1);
    }
    println!("all selected criteria passed");
}

/// Criteria 3 to 7 share the shock-tube runs.
fn shock_tube_criteria(gate: &mut Gate) {
    let t = Instant::now();
    let runs: mrmhd::Result<Vec<ShockRun>> =
        [Direction::X, Direction::Y, Direction::Z].into_iter().map(|d| shock_tube(5, d)).collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            for (id, title) in [
                ("3", "directional symmetry at L=5"),
                ("5", "Bx constancy at L=5"),
                ("7", "conservation at L=5"),
                ("4", "convergence to the reference"),
                ("6", "compression at L=6"),
            ] {
                gate.report(id, title, Err(e.to_string()), t);
            }
            return;
        }
    };
    gate.report("3", "directional symmetry at L=5", criterion_3(&runs[0], &runs[1], &runs[2]), t);
    let t = Instant::now();
    gate.report("5", "Bx constancy at L=5", criterion_5(&runs[0]), t);
    gate.report("7", "conservation at L=5", criterion_7(&runs[0]), t);
    let t = Instant::now();
    match (shock_tube(4, Direction::X), shock_tube(6, Direction::X)) {
        (Ok(c), Ok(f)) => {
            gate.report("4", "convergence to the reference", criterion_4(&[(4, &c), (5, &runs[0]), (6, &f)]), t);
            gate.report("6", "compression at L=6", criterion_6(&f), t);
        }
        (Err(e), _) | (_, Err(e)) => {
            gate.report("4", "convergence to the reference", Err(e.to_string()), t);
            gate.report("6", "compression at L=6", Err(e.to_string()), t);
        }
    }
}
