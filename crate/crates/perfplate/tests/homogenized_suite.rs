mod common;

use common::linf_diff;
use perfplate::{
    assemble_temperature, default_stop_tol, field_axpy, fixed_point_solve, helmholtz_cg,
    helmholtz_cg_solve, mg_solve, smallest_laplacian_eigenvalue, Error, Grid2D,
    HomogenizedProblem, MgConfig, ScalarField,
};
use perfplate::field::symmetry_deviation;
use std::f64::consts::PI;

fn unit_problem(n: usize) -> HomogenizedProblem {
    let grid = Grid2D::new(n).unwrap();
    let f = ScalarField::constant(grid, 1.0);
    HomogenizedProblem::new(0.5, 10.0, f).unwrap()
}

#[test]
fn fixed_point_matches_cg_oracle() {
    for n in [16usize, 128] {
        let p = unit_problem(n);
        let (g_fp, trace) =
            fixed_point_solve(&p, &MgConfig::default(), default_stop_tol(p.f()), 200).unwrap();
        assert!(trace.converged);
        let g_cg = helmholtz_cg_solve(&p, 1e-12).unwrap();
        let diff = linf_diff(&g_fp, &g_cg);
        assert!(diff <= 1e-8, "n = {n}: fixed point vs CG {diff:.3e}");
    }
}

#[test]
fn step_ratio_settles_at_mu_over_lambda() {
    let p = unit_problem(16);
    let (_, trace) =
        fixed_point_solve(&p, &MgConfig::default(), default_stop_tol(p.f()), 200).unwrap();
    let expected = p.mu() / smallest_laplacian_eigenvalue(p.grid());
    let deltas = &trace.deltas;
    assert!(deltas.len() >= 5);
    for k in 1..deltas.len() {
        let ratio = deltas[k] / deltas[k - 1];
        assert!(
            (ratio - expected).abs() <= 0.02,
            "iteration {}: ratio {ratio:.5} vs {expected:.5}",
            k + 1
        );
        assert!(deltas[k] < deltas[k - 1], "deltas must keep shrinking");
    }
    assert!((trace.final_ratio() - expected).abs() <= 0.02);
}

#[test]
fn cg_with_zero_absorption_matches_multigrid() {
    let grid = Grid2D::new(16).unwrap();
    let f = ScalarField::constant(grid, 1.0);
    let g_cg = helmholtz_cg(&f, 0.0, 1e-12).unwrap();
    let (g_mg, _) = mg_solve(&f.scaled(-1.0), &MgConfig::default()).unwrap();
    let diff = linf_diff(&g_cg, &g_mg);
    assert!(diff <= 1e-9, "cross-solver diff {diff:.3e}");
}

#[test]
fn solution_decreases_pointwise_as_absorption_grows() {
    let grid = Grid2D::new(16).unwrap();
    let f = ScalarField::constant(grid, 1.0);
    let g0 = helmholtz_cg(&f, 0.0, 1e-12).unwrap();
    let g1 = helmholtz_cg(&f, PI, 1e-12).unwrap();
    let g2 = helmholtz_cg(&f, 2.0 * PI, 1e-12).unwrap();
    for j in 1..16 {
        for i in 1..16 {
            assert!(
                g0.get(i, j) > g1.get(i, j) && g1.get(i, j) > g2.get(i, j),
                "monotonicity fails at ({i},{j})"
            );
        }
    }
}

#[test]
fn fixed_point_is_linear_in_the_source() {
    let grid = Grid2D::new(16).unwrap();
    let f1 = ScalarField::from_fn(grid, |x, y| 1.0 + x * y);
    let f2 = ScalarField::from_fn(grid, |x, y| (PI * x).sin() * (2.0 + y));
    let sum = field_axpy(1.0, &f1, &f2).unwrap();
    let mg = MgConfig::default();
    let solve = |f: &ScalarField| {
        let p = HomogenizedProblem::new(0.5, 10.0, f.clone()).unwrap();
        fixed_point_solve(&p, &mg, 1e-12, 400).unwrap().0
    };
    let combined = solve(&sum);
    let separate = field_axpy(1.0, &solve(&f1), &solve(&f2)).unwrap();
    let diff = linf_diff(&combined, &separate);
    assert!(diff <= 1e-9, "linearity violated by {diff:.3e}");
}

#[test]
fn symmetric_source_gives_symmetric_temperature() {
    let grid = Grid2D::new(32).unwrap();
    let f = ScalarField::from_fn(grid, |x, y| {
        let dx = (x - 0.5).abs();
        let dy = (y - 0.5).abs();
        1.0 + dx * dx + dy * dy
    });
    let p = HomogenizedProblem::new(0.5, 10.0, f).unwrap();
    let (g, _) = fixed_point_solve(&p, &MgConfig::default(), 1e-11, 200).unwrap();
    let u = assemble_temperature(&g, 10.0);
    assert!(symmetry_deviation(&u) <= 1e-12);
}

#[test]
fn interior_temperature_strictly_above_boundary_datum() {
    let p = unit_problem(16);
    let (g, _) =
        fixed_point_solve(&p, &MgConfig::default(), default_stop_tol(p.f()), 200).unwrap();
    let u = assemble_temperature(&g, 10.0);
    // Positive sources force G > 0 inside; confirm the sign with the CG route.
    let g_cg = helmholtz_cg_solve(&p, 1e-12).unwrap();
    for j in 1..16 {
        for i in 1..16 {
            assert!(u.get(i, j) > 10.0, "U({i},{j}) = {}", u.get(i, j));
            assert!(g_cg.get(i, j) > 0.0);
        }
    }
    let side = p.grid().nodes_per_side();
    for k in 0..side {
        assert_eq!(u.get(k, 0), 10.0);
        assert_eq!(u.get(k, 16), 10.0);
        assert_eq!(u.get(0, k), 10.0);
        assert_eq!(u.get(16, k), 10.0);
    }
}

#[test]
fn exhausted_iteration_cap_reports_trace() {
    let p = unit_problem(16);
    match fixed_point_solve(&p, &MgConfig::default(), 1e-14, 2) {
        Err(Error::NonConvergence { history, last, .. }) => {
            assert_eq!(history.len(), 2);
            assert!(last > 0.0);
        }
        other => panic!("expected non-convergence, got {:?}", other.map(|_| ())),
    }
}
