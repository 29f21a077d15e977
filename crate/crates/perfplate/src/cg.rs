//! Conjugate-gradient kernel for the masked, optionally shifted Laplacian.
//!
//! The operator is `A v = -lap_h v + shift * v` restricted to the active
//! nodes of a mask; non-active entries of every vector are held at exactly
//! zero, which realizes the Dirichlet condition of the transformed system.
//! The stencil is written independently of the multigrid module so the two
//! solver routes share no numerical code.

use crate::error::{require_positive, Error, Result};
use crate::field::Grid2D;

pub(crate) struct MaskedSystem<'a> {
    grid: Grid2D,
    active: &'a [bool],
    shift: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CgOptions {
    /// Divide residuals by the diagonal before each projection step. The
    /// diagonal of this operator is constant, so this changes rounding only;
    /// kept selectable for experiments.
    pub jacobi_preconditioner: bool,
}

impl<'a> MaskedSystem<'a> {
    pub(crate) fn new(grid: Grid2D, active: &'a [bool], shift: f64) -> Self {
        debug_assert_eq!(active.len(), grid.node_count());
        Self { grid, active, shift }
    }

    /// `out = A v` on active nodes, zero elsewhere. Assumes `v` is zero at
    /// non-active nodes.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let side = self.grid.nodes_per_side();
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        for j in 1..n {
            let row = j * side;
            for i in 1..n {
                let c = row + i;
                if !self.active[c] {
                    out[c] = 0.0;
                    continue;
                }
                let vc = v[c];
                let horiz = (vc - v[c + 1]) + (vc - v[c - 1]);
                let vert = (vc - v[c + side]) + (vc - v[c - side]);
                out[c] = (horiz + vert) * inv_h2 + self.shift * vc;
            }
        }
    }

    fn diagonal(&self) -> f64 {
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        4.0 * inv_h2 + self.shift
    }

    fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` to `|b - A x|_2 <= rel_tol * |b|_2`.
///
/// `b` must be zero at non-active nodes. The iteration cap is ten times the
/// number of unknowns. Convergence of the recurrence residual is confirmed
/// against the true residual before returning.
pub(crate) fn cg_solve(
    system: &MaskedSystem,
    b: &[f64],
    rel_tol: f64,
    opts: CgOptions,
) -> Result<Vec<f64>> {
    require_positive(rel_tol, "relative tolerance")?;
    let len = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; len];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = rel_tol * b_norm;
    let max_iter = 10 * system.active_count().max(1);
    let inv_diag = 1.0 / system.diagonal();

    let precond = |r: &[f64]| -> Vec<f64> {
        if opts.jacobi_preconditioner {
            r.iter().map(|v| v * inv_diag).collect()
        } else {
            r.to_vec()
        }
    };

    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];

    let mut iterations = 0usize;
    while iterations < max_iter {
        iterations += 1;
        system.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // SPD operator: only reachable when p has collapsed to rounding.
            system.apply(&x, &mut ap);
            let true_norm_sq: f64 = b
                .iter()
                .zip(&ap)
                .map(|(bk, ak)| (bk - ak) * (bk - ak))
                .sum();
            if true_norm_sq.sqrt() <= target {
                return Ok(x);
            }
            break;
        }
        let alpha = rz / pap;
        for k in 0..len {
            x[k] += alpha * p[k];
        }
        for k in 0..len {
            r[k] -= alpha * ap[k];
        }
        let r_norm = dot(&r, &r).sqrt();
        if r_norm <= target {
            // Confirm with the true residual; restart from it if the
            // recurrence drifted.
            system.apply(&x, &mut ap);
            let mut r_true = vec![0.0; len];
            for k in 0..len {
                r_true[k] = b[k] - ap[k];
            }
            let true_norm = dot(&r_true, &r_true).sqrt();
            if true_norm <= target {
                return Ok(x);
            }
            r = r_true;
            z = precond(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
        rz = rz_new;
    }

    let last = dot(&r, &r).sqrt() / b_norm;
    Err(Error::NonConvergence {
        what: "conjugate gradient",
        limit: max_iter,
        last,
        history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DomainMask;

    #[test]
    fn zero_rhs_returns_zero() {
        let grid = Grid2D::new(8).unwrap();
        let mask = DomainMask::unperforated(grid);
        let active = mask.active_flags();
        let system = MaskedSystem::new(grid, &active, 1.0);
        let b = vec![0.0; grid.node_count()];
        let x = cg_solve(&system, &b, 1e-10, CgOptions::default()).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobi_variant_agrees_with_plain() {
        let grid = Grid2D::new(16).unwrap();
        let mask = DomainMask::unperforated(grid);
        let active = mask.active_flags();
        let system = MaskedSystem::new(grid, &active, 2.5);
        let mut b = vec![0.0; grid.node_count()];
        for (k, flag) in active.iter().enumerate() {
            if *flag {
                b[k] = (k % 7) as f64 - 3.0;
            }
        }
        let plain = cg_solve(&system, &b, 1e-12, CgOptions::default()).unwrap();
        let jacobi = cg_solve(
            &system,
            &b,
            1e-12,
            CgOptions {
                jacobi_preconditioner: true,
            },
        )
        .unwrap();
        let diff = plain
            .iter()
            .zip(&jacobi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-10, "diff = {diff:.3e}");
    }
}
