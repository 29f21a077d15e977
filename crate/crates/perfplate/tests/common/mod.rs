//! Shared test oracles, independent of the solver paths they check.

#![allow(dead_code)]

use perfplate::{Grid2D, NodeClass, PerforationSpec, ScalarField};

/// Dense Cholesky solve of the masked system `(-lap_h + shift I) x = b`
/// over the active nodes (zero Dirichlet elsewhere). Direct method, no
/// iteration: serves as the ground-truth oracle for both CG and multigrid.
pub fn dense_masked_solve(grid: Grid2D, active: &[bool], shift: f64, b: &[f64]) -> Vec<f64> {
    let side = grid.nodes_per_side();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());

    let mut index = vec![usize::MAX; grid.node_count()];
    let mut nodes = Vec::new();
    for j in 0..side {
        for i in 0..side {
            let k = grid.idx(i, j);
            if active[k] {
                index[k] = nodes.len();
                nodes.push((i, j));
            }
        }
    }
    let n = nodes.len();

    let mut a = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    for (row, &(i, j)) in nodes.iter().enumerate() {
        let k = grid.idx(i, j);
        a[row * n + row] = 4.0 * inv_h2 + shift;
        rhs[row] = b[k];
        let neighbors = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)];
        for (ni, nj) in neighbors {
            let nk = grid.idx(ni, nj);
            if active[nk] {
                a[row * n + index[nk]] = -inv_h2;
            }
        }
    }

    // In-place Cholesky, lower triangle.
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                assert!(s > 0.0, "matrix not positive definite at pivot {i}");
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = rhs;
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / a[i * n + i];
    }

    let mut full = vec![0.0; grid.node_count()];
    for (row, &(i, j)) in nodes.iter().enumerate() {
        full[grid.idx(i, j)] = x[row];
    }
    full
}

/// Independent per-node classification of the hole lattice: scans every
/// center instead of the nearest-cell shortcut the implementation uses.
pub fn brute_force_classes(spec: &PerforationSpec, grid: Grid2D) -> Vec<NodeClass> {
    let side = grid.nodes_per_side();
    let centers = spec.centers();
    let radius = spec.radius();
    let mut classes = vec![NodeClass::Active; grid.node_count()];
    for j in 0..side {
        for i in 0..side {
            let k = grid.idx(i, j);
            if grid.is_boundary(i, j) {
                classes[k] = NodeClass::OuterDirichlet;
                continue;
            }
            let (x, y) = grid.coord(i, j);
            for (cx, cy) in &centers {
                let dx = x - cx;
                let dy = y - cy;
                if dx * dx + dy * dy <= radius * radius {
                    classes[k] = NodeClass::HoleDirichlet;
                    break;
                }
            }
        }
    }
    classes
}

/// Sizes of the 4-connected components of hole nodes.
pub fn hole_component_sizes(classes: &[NodeClass], grid: Grid2D) -> Vec<usize> {
    let side = grid.nodes_per_side();
    let mut seen = vec![false; grid.node_count()];
    let mut sizes = Vec::new();
    for start in 0..grid.node_count() {
        if classes[start] != NodeClass::HoleDirichlet || seen[start] {
            continue;
        }
        let mut size = 0usize;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            size += 1;
            let i = k % side;
            let j = k / side;
            let mut push = |ni: usize, nj: usize| {
                let nk = nj * side + ni;
                if classes[nk] == NodeClass::HoleDirichlet && !seen[nk] {
                    seen[nk] = true;
                    stack.push(nk);
                }
            };
            if i + 1 < side {
                push(i + 1, j);
            }
            if i > 0 {
                push(i - 1, j);
            }
            if j + 1 < side {
                push(i, j + 1);
            }
            if j > 0 {
                push(i, j - 1);
            }
        }
        sizes.push(size);
    }
    sizes
}

pub fn linf_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    assert_eq!(a.grid(), b.grid());
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The discrete sine mode, the eigenfunction of the 5-point Laplacian.
pub fn sine_field(grid: Grid2D) -> ScalarField {
    use std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin())
}

/// A smooth asymmetric field from a handful of coefficients, for
/// randomized solver properties.
pub fn smooth_field(grid: Grid2D, c: &[f64; 6]) -> ScalarField {
    use std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, y| {
        c[0] + c[1] * x
            + c[2] * y
            + c[3] * x * y
            + c[4] * (PI * x).sin() * (PI * y).sin()
            + c[5] * 0.5 * (x * x + y * y)
    })
}
