use mrmhd::mesh::{
    adapt, inverse_mr_transform, mr_transform, read_mesh_dump, threshold, write_mesh_dump, AdaptiveMesh, Boundary,
    Domain, ThresholdPolicy,
};
use mrmhd::ConservedState;
use proptest::prelude::*;

/// Gaussian bumps on a constant background, sampled at level 4.
fn bumpy_mesh(bumps: &[([f64; 3], f64)], boundary: Boundary) -> AdaptiveMesh {
    AdaptiveMesh::uniform(Domain::cube(0.0, 1.0).unwrap(), 4, boundary, 4, |g| {
        let b: f64 = bumps
            .iter()
            .map(|(p, a)| {
                let r2: f64 = (0..3).map(|k| (g.center[k] - p[k]).powi(2)).sum();
                a * (-r2 / 0.01).exp()
            })
            .sum();
        let mut s = ConservedState::ZERO;
        for v in 0..9 {
            s[v] = 1.0 + 0.05 * v as f64 + b;
        }
        s
    })
    .unwrap()
}

fn bumps() -> impl Strategy<Value = Vec<([f64; 3], f64)>> {
    prop::collection::vec(([0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64], 0.2..2.0f64), 1..4)
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::ZeroGradient), Just(Boundary::Periodic)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn adapted_trees_are_graded_and_tile(b in bumps(), bc in boundary(), eps0 in 0.01..1.0f64) {
        let mesh = bumpy_mesh(&b, bc);
        let policy = ThresholdPolicy::new(eps0, 1.0, 4).unwrap();
        let adapted = adapt(&mesh, &policy).unwrap();
        adapted.check_grading().unwrap();
        prop_assert!(adapted.tiling_defect() < 1e-12);
        // adaptation never creates or destroys conserved quantities
        let (a, t) = (mesh.totals(), adapted.totals());
        for v in 0..9 {
            prop_assert!((a[v] - t[v]).abs() < 1e-12, "variable {} total {} -> {}", v, a[v], t[v]);
        }
    }

    #[test]
    fn larger_threshold_never_adds_leaves(b in bumps(), e in 0.005..0.5f64) {
        let dec = mr_transform(&bumpy_mesh(&b, Boundary::ZeroGradient));
        let count = |eps0: f64| {
            let p = ThresholdPolicy::new(eps0, 1.0, 4).unwrap();
            inverse_mr_transform(&threshold(&dec, &p).unwrap()).unwrap().leaf_count()
        };
        prop_assert!(count(2.0 * e) <= count(e));
    }
}

#[test]
fn dump_reload_preserves_adapted_tree() {
    let mesh = bumpy_mesh(&[([0.3, 0.6, 0.5], 1.0)], Boundary::ZeroGradient);
    let adapted = adapt(&mesh, &ThresholdPolicy::new(0.1, 1.0, 4).unwrap()).unwrap();
    assert!(adapted.leaf_count() < mesh.leaf_count());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.csv");
    write_mesh_dump(&adapted, &path, &["test dump".to_string()]).unwrap();
    let back = read_mesh_dump(&path).unwrap();
    assert_eq!(back.leaves(), adapted.leaves());
    assert_eq!(back.leaf_states(), adapted.leaf_states());
}
