use mrmhd::cases::{build_initial_mesh, BzVariant, InitialCondition, RiemannSpec1D, SmoothAdvection};
use mrmhd::evolution::{euler_stage, rk2_step, EvolutionParams};
use mrmhd::flux::SchemeOptions;
use mrmhd::mesh::{AdaptiveMesh, Boundary, VariableScaling};
use mrmhd::state::{PSI, RHO};
use mrmhd::{ConservedState, Direction, GasGamma};

fn gamma() -> GasGamma {
    GasGamma::default()
}

fn l1_diff(a: &[ConservedState], b: &[ConservedState]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (0..9).map(|v| (x[v] - y[v]).abs()).sum::<f64>())
        .sum::<f64>()
        / a.len() as f64
}

/// Adaptive shock-tube mesh with a nonzero ψ so the damping is exercised.
fn shock_mesh_with_psi() -> AdaptiveMesh {
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, Direction::X);
    let (mut mesh, _) =
        build_initial_mesh(&spec, gamma(), 4, Boundary::ZeroGradient, Some(0.1), VariableScaling::PerVariable, 3)
            .unwrap();
    mesh.map_leaves(|_, g, u| {
        let mut u = *u;
        u[PSI] = 0.05 * (3.0 * g.center[0]).sin();
        u
    });
    mesh
}

#[test]
fn step_matches_hand_composed_stages() {
    let mesh = shock_mesh_with_psi();
    let levels: std::collections::BTreeSet<u8> = mesh.leaves().iter().map(|c| c.level).collect();
    assert!(levels.len() > 1, "expected level jumps, got levels {levels:?}");
    let params = EvolutionParams::new(gamma(), 0.3, 0.4, 1.0).unwrap();
    let (stepped, report) = rk2_step(mesh.clone(), &params, f64::INFINITY).unwrap();

    let scheme = SchemeOptions::default();
    let half = (-0.5 * report.dt * 0.4 * report.ch / mesh.min_spacing()).exp();
    let mut u0 = mesh.clone();
    u0.map_leaves(|_, _, u| {
        let mut u = *u;
        u[PSI] *= half;
        u
    });
    let u1 = euler_stage(&u0, report.dt, gamma(), report.ch, &scheme).unwrap();
    let u2 = euler_stage(&u1, report.dt, gamma(), report.ch, &scheme).unwrap();
    let expected: Vec<ConservedState> = u0
        .leaf_states()
        .iter()
        .zip(u2.leaf_states())
        .map(|(a, b)| {
            let mut u = (*a + b) * 0.5;
            u[PSI] *= half;
            u
        })
        .collect();
    let d = l1_diff(&stepped.leaf_states(), &expected);
    assert!(d < 1e-14, "hand-composed step differs by {d:e}");
}

fn advance_fixed(mesh: &AdaptiveMesh, params: &EvolutionParams, dt: f64, n: usize) -> Vec<ConservedState> {
    let mut m = mesh.clone();
    for _ in 0..n {
        let (next, r) = rk2_step(m, params, dt).unwrap();
        assert_eq!(r.dt, dt, "step must be limited by the requested dt");
        m = next;
    }
    m.leaf_states()
}

#[test]
fn time_integration_is_second_order() {
    let wave = SmoothAdvection::default();
    let (mesh, _) = build_initial_mesh(&wave, gamma(), 3, Boundary::Periodic, None, VariableScaling::None, 3).unwrap();
    let params = EvolutionParams::new(gamma(), 0.3, 0.4, 1.0).unwrap();
    let (_, probe) = rk2_step(mesh.clone(), &params, f64::INFINITY).unwrap();
    let dt = 0.5 * probe.dt;
    let a = advance_fixed(&mesh, &params, dt, 4);
    let b = advance_fixed(&mesh, &params, dt / 2.0, 8);
    let c = advance_fixed(&mesh, &params, dt / 4.0, 16);
    let order = (l1_diff(&a, &b) / l1_diff(&b, &c)).log2();
    assert!(order >= 1.9, "temporal order {order}");
}

#[test]
fn mass_change_equals_boundary_flux() {
    // the entropy wave on non-periodic walls carries mass in and out at different rates
    let wave = SmoothAdvection::default();
    let g = gamma();
    let mut mesh = AdaptiveMesh::uniform(wave.domain(), 3, Boundary::ZeroGradient, 3, |c| wave.cell_average(c, g)).unwrap();
    let params = EvolutionParams::new(g, 0.3, 0.4, 1.0).unwrap();
    let m0 = mesh.totals()[RHO];
    let mut inflow = 0.0;
    for _ in 0..5 {
        let (next, r) = rk2_step(mesh, &params, f64::INFINITY).unwrap();
        inflow += r.wall_inflow[RHO];
        mesh = next;
    }
    let change = mesh.totals()[RHO] - m0;
    assert!(inflow.abs() > 1e-5, "test needs a net boundary flux, got {inflow:e}");
    assert!((change - inflow).abs() < 1e-13 * m0, "mass change {change:e} vs wall inflow {inflow:e}");
}

#[test]
fn periodic_adaptive_step_conserves_totals() {
    // the shock tube made periodic has jumps at the centre and at the wrap
    let spec = RiemannSpec1D::shock_tube(BzVariant::Literature, Direction::Y);
    let (mesh, _) =
        build_initial_mesh(&spec, gamma(), 5, Boundary::Periodic, Some(0.1), VariableScaling::PerVariable, 3).unwrap();
    let levels: std::collections::BTreeSet<u8> = mesh.leaves().iter().map(|c| c.level).collect();
    assert!(levels.len() > 1, "expected level jumps, got levels {levels:?}");
    let params = EvolutionParams::new(gamma(), 0.3, 0.4, 1.0).unwrap();
    let before = mesh.totals();
    let (after, r) = rk2_step(mesh, &params, f64::INFINITY).unwrap();
    assert_eq!(r.wall_inflow, ConservedState::ZERO);
    let after = after.totals();
    for v in 0..8 {
        let scale = before[v].abs().max(1.0);
        assert!((after[v] - before[v]).abs() < 1e-12 * scale, "variable {v}: {} -> {}", before[v], after[v]);
    }
}
