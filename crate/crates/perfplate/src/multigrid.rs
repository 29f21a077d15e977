//! Geometric multigrid for the 5-point Laplacian with a zero Dirichlet
//! boundary.
//!
//! `mg_solve` solves `lap_h G = F` on the unit square with `G = 0` on the
//! frame, using V-cycles with red-black Gauss-Seidel smoothing, full-weighting
//! restriction and bilinear prolongation. The boundary values of `F` are
//! ignored: the equation is imposed at interior nodes only.
//!
//! Stencil sums are grouped as `(east + west) + (north + south)` (and
//! diagonal pairs for the transfer operators). Because IEEE addition is
//! commutative, this makes every operation bit-for-bit equivariant under the
//! eight symmetries of the square, so symmetric inputs give symmetric
//! solutions exactly.

use crate::error::{require_positive, Error, Result};
use crate::field::{Grid2D, ScalarField};

/// V-cycle parameters. The defaults are the standard V(2,2) choices for the
/// 5-point Laplacian.
#[derive(Clone, Debug)]
pub struct MgConfig {
    /// Smoothing sweeps before descending.
    pub pre_smooth: usize,
    /// Smoothing sweeps after the coarse-grid correction.
    pub post_smooth: usize,
    /// Maximum number of V-cycles before giving up.
    pub max_cycles: usize,
    /// Convergence target: `|residual|_inf <= target * max(1, |F|_inf)`.
    pub target_residual_linf: f64,
    /// Cells per side of the coarsest level.
    pub coarsest_n: usize,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            pre_smooth: 2,
            post_smooth: 2,
            max_cycles: 50,
            target_residual_linf: 1e-12,
            coarsest_n: 2,
        }
    }
}

impl MgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pre_smooth + self.post_smooth < 1 {
            return Err(Error::InvalidConfig(
                "multigrid needs at least one smoothing sweep per cycle".into(),
            ));
        }
        if self.coarsest_n < 2 {
            return Err(Error::InvalidConfig(format!(
                "coarsest level needs n >= 2, got {}",
                self.coarsest_n
            )));
        }
        require_positive(self.target_residual_linf, "residual target")?;
        Ok(())
    }
}

fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n & (n - 1) == 0
}

/// Apply the 5-point Laplacian: `(u_E + u_W + u_N + u_S - 4u)/h^2` at
/// interior nodes, zero at boundary nodes by convention.
pub fn laplacian_apply(u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let n = grid.n();
    let side = grid.nodes_per_side();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let v = u.values();
    let mut out = vec![0.0; grid.node_count()];
    for j in 1..n {
        let row = j * side;
        for i in 1..n {
            let c = row + i;
            let uc = v[c];
            let horiz = (v[c + 1] - uc) + (v[c - 1] - uc);
            let vert = (v[c + side] - uc) + (v[c - side] - uc);
            out[c] = (horiz + vert) * inv_h2;
        }
    }
    ScalarField::from_values(grid, out).expect("sized to grid")
}

/// One grid level of the V-cycle hierarchy.
struct Level {
    n: usize,
    h: f64,
    u: Vec<f64>,
    rhs: Vec<f64>,
    res: Vec<f64>,
}

impl Level {
    fn new(n: usize) -> Self {
        let len = (n + 1) * (n + 1);
        Self {
            n,
            h: 1.0 / n as f64,
            u: vec![0.0; len],
            rhs: vec![0.0; len],
            res: vec![0.0; len],
        }
    }

    /// Red-black Gauss-Seidel sweeps for `lap_h u = rhs`.
    fn smooth(&mut self, sweeps: usize) {
        let n = self.n;
        let side = n + 1;
        let h2 = self.h * self.h;
        for _ in 0..sweeps {
            for color in 0..2usize {
                for j in 1..n {
                    let row = j * side;
                    // First interior i of this color in row j.
                    let start = 1 + ((j + 1 + color) & 1);
                    let mut i = start;
                    while i < n {
                        let c = row + i;
                        let horiz = self.u[c + 1] + self.u[c - 1];
                        let vert = self.u[c + side] + self.u[c - side];
                        self.u[c] = ((horiz + vert) - h2 * self.rhs[c]) * 0.25;
                        i += 2;
                    }
                }
            }
        }
    }

    /// `res = rhs - lap_h u` at interior nodes, zero on the frame.
    fn residual(&mut self) {
        let n = self.n;
        let side = n + 1;
        let inv_h2 = 1.0 / (self.h * self.h);
        for j in 1..n {
            let row = j * side;
            for i in 1..n {
                let c = row + i;
                let uc = self.u[c];
                let horiz = (self.u[c + 1] - uc) + (self.u[c - 1] - uc);
                let vert = (self.u[c + side] - uc) + (self.u[c - side] - uc);
                self.res[c] = self.rhs[c] - (horiz + vert) * inv_h2;
            }
        }
    }

    fn residual_linf(&mut self) -> f64 {
        self.residual();
        self.res.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Full-weighting restriction of `fine` (length (2n+1)^2) onto a coarse
/// grid with n cells per side. Coarse frame nodes get the injected fine
/// value, interior nodes the 1/4-1/8-1/16 average.
pub(crate) fn restrict(fine: &[f64], coarse_n: usize) -> Vec<f64> {
    let fine_n = 2 * coarse_n;
    let fs = fine_n + 1;
    let cs = coarse_n + 1;
    let mut coarse = vec![0.0; cs * cs];
    for cj in 0..cs {
        for ci in 0..cs {
            let fi = 2 * ci;
            let fj = 2 * cj;
            let f = fj * fs + fi;
            let c = cj * cs + ci;
            if ci == 0 || cj == 0 || ci == coarse_n || cj == coarse_n {
                coarse[c] = fine[f];
            } else {
                let edges = (fine[f + 1] + fine[f - 1]) + (fine[f + fs] + fine[f - fs]);
                let corners = (fine[f + fs + 1] + fine[f - fs - 1])
                    + (fine[f + fs - 1] + fine[f - fs + 1]);
                coarse[c] = 0.25 * fine[f] + 0.125 * edges + 0.0625 * corners;
            }
        }
    }
    coarse
}

/// Bilinear prolongation of `coarse` (n cells per side) onto the fine grid
/// with 2n cells per side.
pub(crate) fn prolong(coarse: &[f64], coarse_n: usize) -> Vec<f64> {
    let fine_n = 2 * coarse_n;
    let fs = fine_n + 1;
    let cs = coarse_n + 1;
    let mut fine = vec![0.0; fs * fs];
    for fj in 0..fs {
        for fi in 0..fs {
            let ci = fi / 2;
            let cj = fj / 2;
            let c = cj * cs + ci;
            fine[fj * fs + fi] = match (fi & 1, fj & 1) {
                (0, 0) => coarse[c],
                (1, 0) => 0.5 * (coarse[c] + coarse[c + 1]),
                (0, 1) => 0.5 * (coarse[c] + coarse[c + cs]),
                _ => {
                    0.25 * ((coarse[c + cs + 1] + coarse[c]) + (coarse[c + cs] + coarse[c + 1]))
                }
            };
        }
    }
    fine
}

/// Relax the coarsest level to (near) machine precision.
fn coarse_solve(level: &mut Level) -> Result<()> {
    let scale = level
        .rhs
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
        .max(1.0);
    let tol = 1e-14 * scale;
    // Plenty for the tiny grids this runs on; n = 2 converges in one sweep.
    let cap = 200_000;
    for _ in 0..cap {
        level.smooth(1);
        if level.residual_linf() <= tol {
            return Ok(());
        }
    }
    Err(Error::NonConvergence {
        what: "multigrid coarse solve",
        limit: cap,
        last: level.residual_linf(),
        history: Vec::new(),
    })
}

fn v_cycle(levels: &mut [Level], cfg: &MgConfig) -> Result<()> {
    let (this, rest) = levels.split_first_mut().expect("at least one level");
    if rest.is_empty() {
        return coarse_solve(this);
    }
    this.smooth(cfg.pre_smooth);
    this.residual();

    let next = &mut rest[0];
    next.rhs = restrict(&this.res, next.n);
    next.u.fill(0.0);
    v_cycle(rest, cfg)?;

    let correction = prolong(&rest[0].u, rest[0].n);
    for (u, c) in this.u.iter_mut().zip(&correction) {
        *u += c;
    }
    this.smooth(cfg.post_smooth);
    Ok(())
}

/// Solve `lap_h G = F` with `G = 0` on the frame.
///
/// Returns the solution and the max-norm residual recorded after each
/// V-cycle. `F` must live on a power-of-two grid so the coarsening chain
/// reaches `cfg.coarsest_n`. Failure to reach the tolerance within
/// `cfg.max_cycles` is an error carrying the residual history.
///
/// The iteration stops at `target * max(1, |F|_inf)` plus the attainable
/// floor `8 * EPS * |G|_inf / h^2`; on fine grids the requested target can
/// fall below what any representable solution vector admits.
pub fn mg_solve(f: &ScalarField, cfg: &MgConfig) -> Result<(ScalarField, Vec<f64>)> {
    cfg.validate()?;
    let grid = f.grid();
    let n = grid.n();
    if !is_power_of_two(n) {
        return Err(Error::InvalidConfig(format!(
            "multigrid needs n to be a power of two, got {n}"
        )));
    }
    if !is_power_of_two(cfg.coarsest_n) {
        return Err(Error::InvalidConfig(format!(
            "coarsest level must be a power of two, got {}",
            cfg.coarsest_n
        )));
    }
    if n < cfg.coarsest_n {
        return Err(Error::InvalidConfig(format!(
            "grid n = {n} is below the coarsest level n = {}",
            cfg.coarsest_n
        )));
    }

    let mut levels = Vec::new();
    let mut level_n = n;
    levels.push(Level::new(level_n));
    while level_n > cfg.coarsest_n {
        level_n /= 2;
        levels.push(Level::new(level_n));
    }
    levels[0].rhs.copy_from_slice(f.values());

    let f_linf = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = cfg.target_residual_linf * f_linf.max(1.0);
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    // One ulp on the stored solution already moves the residual by up to
    // 8/h^2 * ulp(|G|), so no representable iterate can push the residual
    // below this floor; the stopping rule accounts for it.
    let attainable = |levels: &[Level]| {
        let u_linf = levels[0].u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        tol + 8.0 * f64::EPSILON * u_linf * inv_h2
    };

    let mut history = Vec::new();
    if levels[0].residual_linf() <= attainable(&levels) {
        let g = ScalarField::from_values(grid, levels[0].u.clone()).expect("sized to grid");
        return Ok((g, history));
    }
    for _ in 0..cfg.max_cycles {
        v_cycle(&mut levels, cfg)?;
        let r = levels[0].residual_linf();
        history.push(r);
        if r <= attainable(&levels) {
            let g = ScalarField::from_values(grid, levels[0].u.clone()).expect("sized to grid");
            return Ok((g, history));
        }
    }
    let last = *history.last().expect("max_cycles >= 1");
    Err(Error::NonConvergence {
        what: "multigrid",
        limit: cfg.max_cycles,
        last,
        history,
    })
}

/// Smallest eigenvalue of the negative 5-point Laplacian on the unit square
/// at spacing `h`: `(8/h^2) sin^2(pi h / 2)`.
pub fn smallest_laplacian_eigenvalue(grid: Grid2D) -> f64 {
    let h = grid.spacing();
    let s = (std::f64::consts::PI * h / 2.0).sin();
    8.0 / (h * h) * s * s
}
