//! The homogenized limit problem on the unperforated square:
//!
//! `-lap U + mu U = f + mu T` with `U = T` on the frame, `mu = pi / (2 c0)`.
//!
//! Substituting `U = G + T` reduces it to `-lap G + mu G = f` with `G = 0`
//! on the frame, which is what both solver routes work on:
//!
//! * [`fixed_point_solve`] iterates `G_{n+1} = mg_solve(mu * G_n - f)` from
//!   `G_0 = 0` and records the step distances `delta_n = |G_{n+1} - G_n|`
//!   (plain Euclidean norm). The error contracts geometrically with ratio
//!   `mu / lambda_1`, `lambda_1` the smallest eigenvalue of the negative
//!   discrete Laplacian, so the scheme converges whenever `mu < lambda_1`.
//! * [`helmholtz_cg_solve`] solves the same linear system by conjugate
//!   gradients, independent of the multigrid path, and serves as the oracle
//!   for the fixed point.

use crate::cg::{cg_solve, CgOptions, MaskedSystem};
use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::field::{field_axpy, DomainMask, Grid2D, NormKind, ScalarField};
use crate::multigrid::{mg_solve, MgConfig};

/// `mu = pi / (2 c0)` for the hole-radius law constant `c0 > 0`.
pub fn mu_from_c0(c0: f64) -> Result<f64> {
    require_positive(c0, "c0")?;
    Ok(std::f64::consts::PI / (2.0 * c0))
}

/// The limit problem data: absorption constant derived from `c0`, constant
/// boundary temperature, and the source density.
///
/// `mu` is always recomputed from `c0`, never stored.
#[derive(Clone, Debug)]
pub struct HomogenizedProblem {
    c0: f64,
    t_boundary: f64,
    f: ScalarField,
}

impl HomogenizedProblem {
    pub fn new(c0: f64, t_boundary: f64, f: ScalarField) -> Result<Self> {
        mu_from_c0(c0)?;
        Ok(Self { c0, t_boundary, f })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn mu(&self) -> f64 {
        mu_from_c0(self.c0).expect("validated at construction")
    }

    pub fn t_boundary(&self) -> f64 {
        self.t_boundary
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn grid(&self) -> Grid2D {
        self.f.grid()
    }
}

/// Step distances of the fixed-point iteration and its verdict.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    /// `delta_n = |G_{n+1} - G_n|`, Euclidean over all nodes, one entry per
    /// iteration performed.
    pub deltas: Vec<f64>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.deltas.len()
    }

    /// Ratio of the last two step distances; NaN when fewer than two
    /// iterations ran or the denominator vanished. Reliable (NaN-free) from
    /// three iterations on.
    pub fn final_ratio(&self) -> f64 {
        let k = self.deltas.len();
        if k < 2 || self.deltas[k - 2] == 0.0 {
            f64::NAN
        } else {
            self.deltas[k - 1] / self.deltas[k - 2]
        }
    }
}

/// Default stopping threshold for the fixed point: `1e-10 * max(1, |f|_inf)`.
pub fn default_stop_tol(f: &ScalarField) -> f64 {
    1e-10 * f.norm(NormKind::Linf).max(1.0)
}

/// Iterate `G_{n+1} = mg_solve(mu * G_n - f)` from `G_0 = 0` until
/// `delta_n <= stop_tol`.
///
/// Every iterate is zero on the frame. Returns the final iterate and the
/// full trace; hitting `max_iter` is an error carrying the step distances.
pub fn fixed_point_solve(
    problem: &HomogenizedProblem,
    mg: &MgConfig,
    stop_tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, IterationTrace)> {
    require_positive(stop_tol, "stopping tolerance")?;
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    let mu = problem.mu();
    let neg_f = problem.f.scaled(-1.0);
    let mut g = ScalarField::zeros(problem.grid());
    let mut deltas = Vec::new();

    for _ in 0..max_iter {
        let rhs = field_axpy(mu, &g, &neg_f).expect("same grid by construction");
        let (g_next, _) = mg_solve(&rhs, mg)?;
        let delta = g_next.euclidean_distance(&g).expect("same grid");
        deltas.push(delta);
        g = g_next;
        if delta <= stop_tol {
            return Ok((
                g,
                IterationTrace {
                    deltas,
                    converged: true,
                },
            ));
        }
    }
    let last = *deltas.last().expect("max_iter >= 1");
    Err(Error::NonConvergence {
        what: "fixed-point iteration",
        limit: max_iter,
        last,
        history: deltas,
    })
}

/// Conjugate-gradient solve of `(-lap_h + mu I) G = f` over the interior
/// with `G = 0` on the frame. Accepts any `mu >= 0`; the system is
/// symmetric positive definite.
pub fn helmholtz_cg(f: &ScalarField, mu: f64, rel_tol: f64) -> Result<ScalarField> {
    helmholtz_cg_with(f, mu, rel_tol, CgOptions::default())
}

/// [`helmholtz_cg`] with explicit CG options.
pub fn helmholtz_cg_with(
    f: &ScalarField,
    mu: f64,
    rel_tol: f64,
    opts: CgOptions,
) -> Result<ScalarField> {
    require_nonnegative(mu, "absorption constant")?;
    let grid = f.grid();
    let mask = DomainMask::unperforated(grid);
    let active = mask.active_flags();
    let mut b = vec![0.0; grid.node_count()];
    for (k, flag) in active.iter().enumerate() {
        if *flag {
            b[k] = f.values()[k];
        }
    }
    let system = MaskedSystem::new(grid, &active, mu);
    let solution = cg_solve(&system, &b, rel_tol, opts)?;
    ScalarField::from_values(grid, solution)
}

/// Independent oracle for the fixed point of [`fixed_point_solve`]: solves
/// the same discrete system with conjugate gradients.
pub fn helmholtz_cg_solve(problem: &HomogenizedProblem, rel_tol: f64) -> Result<ScalarField> {
    helmholtz_cg(&problem.f, problem.mu(), rel_tol)
}

/// `U = G + T` at every node. `G` is zero on the frame, so boundary values
/// equal `t_boundary` exactly.
pub fn assemble_temperature(g: &ScalarField, t_boundary: f64) -> ScalarField {
    g.shifted(t_boundary)
}
