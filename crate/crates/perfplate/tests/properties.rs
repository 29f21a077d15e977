mod common;

use common::{linf_diff, smooth_field};
use perfplate::field::symmetry_deviation;
use perfplate::{
    build_mask, default_stop_tol, field_axpy, fixed_point_solve, helmholtz_cg, helmholtz_cg_solve,
    mg_solve, solve_on_mask, Grid2D, HomogenizedProblem, MgConfig, NodeClass, NormKind,
    PerforatedOptions, PerforationSpec, ScalarField,
};
use proptest::prelude::*;

fn field_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, (n + 1) * (n + 1))
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    [
        -10.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
    ]
}

proptest! {
    #[test]
    fn norm_homogeneity(values in field_values(12), c in -50.0f64..50.0) {
        let grid = Grid2D::new(12).unwrap();
        let v = ScalarField::from_values(grid, values).unwrap();
        let scaled = v.scaled(c);
        for kind in [NormKind::Linf, NormKind::L2h, NormKind::H1h] {
            let lhs = scaled.norm(kind);
            let rhs = c.abs() * v.norm(kind);
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() / scale <= 1e-12,
                "{kind:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn norm_triangle_inequality(a in field_values(10), b in field_values(10)) {
        let grid = Grid2D::new(10).unwrap();
        let va = ScalarField::from_values(grid, a).unwrap();
        let vb = ScalarField::from_values(grid, b).unwrap();
        let sum = field_axpy(1.0, &va, &vb).unwrap();
        for kind in [NormKind::Linf, NormKind::L2h, NormKind::H1h] {
            let lhs = sum.norm(kind);
            let rhs = va.norm(kind) + vb.norm(kind);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn h1_never_below_l2(values in field_values(9)) {
        let grid = Grid2D::new(9).unwrap();
        let v = ScalarField::from_values(grid, values).unwrap();
        prop_assert!(v.norm(NormKind::H1h) >= v.norm(NormKind::L2h));
    }

    #[test]
    fn fixed_point_agrees_with_cg_on_smooth_sources(c in coeffs()) {
        let grid = Grid2D::new(16).unwrap();
        let f = smooth_field(grid, &c);
        let p = HomogenizedProblem::new(0.5, 10.0, f.clone()).unwrap();
        let (g_fp, _) = fixed_point_solve(
            &p, &MgConfig::default(), default_stop_tol(&f), 300,
        ).unwrap();
        let g_cg = helmholtz_cg_solve(&p, 1e-12).unwrap();
        prop_assert!(linf_diff(&g_fp, &g_cg) <= 1e-8);
    }

    #[test]
    fn helmholtz_cg_is_linear(a in coeffs(), b in coeffs(), mu in 0.0f64..8.0) {
        let grid = Grid2D::new(16).unwrap();
        let fa = smooth_field(grid, &a);
        let fb = smooth_field(grid, &b);
        let sum = field_axpy(1.0, &fa, &fb).unwrap();
        let ga = helmholtz_cg(&fa, mu, 1e-12).unwrap();
        let gb = helmholtz_cg(&fb, mu, 1e-12).unwrap();
        let gsum = helmholtz_cg(&sum, mu, 1e-12).unwrap();
        let combined = field_axpy(1.0, &ga, &gb).unwrap();
        prop_assert!(linf_diff(&gsum, &combined) <= 1e-9);
    }

    #[test]
    fn perforated_minimum_principle_on_random_sources(c in coeffs()) {
        // Nonnegative source: minimum must sit on the Dirichlet set, at the
        // boundary datum exactly.
        let grid = Grid2D::new(32).unwrap();
        let spec = PerforationSpec::from_reciprocal(2, 0.5).unwrap();
        let mask = build_mask(&spec, grid).unwrap();
        let f_raw = smooth_field(grid, &c);
        let f = ScalarField::from_values(
            grid,
            f_raw.values().iter().map(|v| v.abs()).collect(),
        ).unwrap();
        let u = solve_on_mask(&mask, &f, 10.0, PerforatedOptions::default()).unwrap();
        let min = u.values().iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!((min - 10.0).abs() <= 1e-12);
        let side = grid.nodes_per_side();
        for j in 0..side {
            for i in 0..side {
                if mask.class(i, j) != NodeClass::Active {
                    prop_assert!(u.get(i, j) == 10.0);
                } else {
                    prop_assert!(u.get(i, j) >= 10.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn multigrid_preserves_eightfold_symmetry(q in prop::collection::vec(-5.0f64..5.0, 81)) {
        // Build a symmetric right-hand side from a random 9x9 quadrant.
        let grid = Grid2D::new(16).unwrap();
        let mut f = ScalarField::zeros(grid);
        for j in 0..17usize {
            for i in 0..17usize {
                let qi = i.min(16 - i);
                let qj = j.min(16 - j);
                let (a, b) = (qi.min(qj), qi.max(qj));
                f.set(i, j, q[a * 9 + b]);
            }
        }
        let (g, _) = mg_solve(&f, &MgConfig::default()).unwrap();
        prop_assert!(symmetry_deviation(&g) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // The oracle-equivalence spot check on the larger grid; fewer cases,
    // the solve is ~50x the n = 16 cost.
    #[test]
    fn fixed_point_agrees_with_cg_at_n64(c in coeffs()) {
        let grid = Grid2D::new(64).unwrap();
        let f = smooth_field(grid, &c);
        let p = HomogenizedProblem::new(0.5, 10.0, f.clone()).unwrap();
        let (g_fp, _) = fixed_point_solve(
            &p, &MgConfig::default(), default_stop_tol(&f), 300,
        ).unwrap();
        let g_cg = helmholtz_cg_solve(&p, 1e-12).unwrap();
        prop_assert!(linf_diff(&g_fp, &g_cg) <= 1e-8);
    }
}
