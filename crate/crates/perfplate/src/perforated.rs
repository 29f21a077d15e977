//! The reference problem on the punched plate: a cell-centered lattice of
//! `m x m` circular holes of radius `exp(-c0 / eps^2)`, every hole and the
//! outer frame held at the boundary temperature, heat sources of density `f`.
//!
//! `solve_perforated` solves `-lap U = f` on the active nodes with `U = T`
//! on every Dirichlet node by substituting `V = U - T` (zero on all
//! Dirichlet nodes) and running conjugate gradients on the masked Laplacian.
//! `extend_into_holes` then fills the holes with a constant so the result
//! lives on the whole square and can be compared with the homogenized
//! solution.

use crate::cg::{cg_solve, CgOptions, MaskedSystem};
use crate::error::{require_positive, Error, Result};
use crate::field::{DomainMask, Grid2D, NodeClass, ScalarField};

/// Hole lattice description: `eps = 1/m` cell size, `c0` the radius-law
/// constant, radius `exp(-c0 / eps^2)`, centers at the cell midpoints
/// `((i + 1/2) eps, (j + 1/2) eps)`. `m = 0` denotes the empty lattice
/// (no holes), provided for testing against the unperforated solve.
///
/// The radius is recomputed on demand, never stored. A lattice of `m x m`
/// cells carries `m^2` holes.
#[derive(Clone, Copy, Debug)]
pub struct PerforationSpec {
    epsilon: f64,
    c0: f64,
    m: usize,
}

impl PerforationSpec {
    /// Build the spec from `eps` directly; `1/eps` must be an integer `>= 2`
    /// (to rounding 1e-9) and the radius must stay below `eps/2` so holes
    /// never touch their cell boundaries.
    pub fn new(epsilon: f64, c0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must lie in (0, 1), got {epsilon}"
            )));
        }
        let recip = 1.0 / epsilon;
        let m = recip.round();
        if (recip - m).abs() > 1e-9 || m < 2.0 {
            return Err(Error::InvalidConfig(format!(
                "1/eps must be an integer >= 2, got 1/{epsilon} = {recip}"
            )));
        }
        Self::from_reciprocal(m as usize, c0)
    }

    /// Build the spec from the exact reciprocal `m = 1/eps`.
    pub fn from_reciprocal(m: usize, c0: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidConfig(format!(
                "hole lattice needs 1/eps >= 2, got {m}"
            )));
        }
        require_positive(c0, "c0")?;
        let epsilon = 1.0 / m as f64;
        let spec = Self { epsilon, c0, m };
        let radius = spec.radius();
        if radius >= epsilon / 2.0 {
            return Err(Error::Geometry(format!(
                "hole radius {radius:.6} >= eps/2 = {:.6}; holes would cross their cells",
                epsilon / 2.0
            )));
        }
        Ok(spec)
    }

    /// No holes at all; the punched domain degenerates to the full square.
    pub fn empty() -> Self {
        Self {
            epsilon: 1.0,
            c0: 1.0,
            m: 0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `m = 1/eps`; zero for the empty spec.
    pub fn reciprocal(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn hole_count(&self) -> usize {
        self.m * self.m
    }

    /// `exp(-c0 / eps^2)`; zero for the empty spec.
    pub fn radius(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            (-self.c0 / (self.epsilon * self.epsilon)).exp()
        }
    }

    /// Cell-center hole positions, row by row.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        let mut centers = Vec::with_capacity(self.hole_count());
        for j in 0..self.m {
            for i in 0..self.m {
                centers.push((
                    (i as f64 + 0.5) * self.epsilon,
                    (j as f64 + 0.5) * self.epsilon,
                ));
            }
        }
        centers
    }
}

/// Classify every node of `grid` against the hole lattice: frame nodes are
/// outer-Dirichlet, nodes within `radius` (inclusive) of a hole center are
/// hole-Dirichlet, the rest active.
///
/// Requires `radius >= 3h` so each hole covers a meaningful disk of nodes;
/// failing that is a hard error, not a warning.
pub fn build_mask(spec: &PerforationSpec, grid: Grid2D) -> Result<DomainMask> {
    let h = grid.spacing();
    let radius = spec.radius();
    if !spec.is_empty() && radius < 3.0 * h {
        return Err(Error::UnderResolved {
            radius,
            min_radius: 3.0 * h,
            n: grid.n(),
        });
    }

    let side = grid.nodes_per_side();
    let mut classes = vec![NodeClass::Active; grid.node_count()];
    let r_sq = radius * radius;
    let m = spec.m;
    for j in 0..side {
        for i in 0..side {
            let k = grid.idx(i, j);
            if grid.is_boundary(i, j) {
                classes[k] = NodeClass::OuterDirichlet;
                continue;
            }
            if m == 0 {
                continue;
            }
            // Holes sit at cell centers, so the nearest center is the one of
            // the cell containing the node; radius < eps/2 keeps this exact.
            let (x, y) = grid.coord(i, j);
            let ci = ((x * m as f64).floor() as usize).min(m - 1);
            let cj = ((y * m as f64).floor() as usize).min(m - 1);
            let cx = (ci as f64 + 0.5) * spec.epsilon;
            let cy = (cj as f64 + 0.5) * spec.epsilon;
            let dx = x - cx;
            let dy = y - cy;
            if dx * dx + dy * dy <= r_sq {
                classes[k] = NodeClass::HoleDirichlet;
            }
        }
    }
    DomainMask::new(grid, classes)
}

/// Solver knobs for the masked conjugate-gradient solve.
#[derive(Clone, Copy, Debug)]
pub struct PerforatedOptions {
    pub rel_tol: f64,
    pub cg: CgOptions,
}

impl Default for PerforatedOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            cg: CgOptions::default(),
        }
    }
}

/// Solve the punched-plate problem: `-lap U = f` at active nodes, `U`
/// pinned to `t_boundary` on the frame and on every hole node.
pub fn solve_perforated(
    spec: &PerforationSpec,
    grid: Grid2D,
    f: &ScalarField,
    t_boundary: f64,
    rel_tol: f64,
) -> Result<ScalarField> {
    let mask = build_mask(spec, grid)?;
    solve_on_mask(
        &mask,
        f,
        t_boundary,
        PerforatedOptions {
            rel_tol,
            cg: CgOptions::default(),
        },
    )
}

/// Like [`solve_perforated`] but reusing an already built mask.
pub fn solve_on_mask(
    mask: &DomainMask,
    f: &ScalarField,
    t_boundary: f64,
    opts: PerforatedOptions,
) -> Result<ScalarField> {
    let grid = mask.grid();
    if f.grid() != grid {
        return Err(Error::ShapeMismatch(format!(
            "source field grid n = {} does not match mask grid n = {}",
            f.grid().n(),
            grid.n()
        )));
    }
    let active = mask.active_flags();
    let mut b = vec![0.0; grid.node_count()];
    for (k, flag) in active.iter().enumerate() {
        if *flag {
            b[k] = f.values()[k];
        }
    }
    let system = MaskedSystem::new(grid, &active, 0.0);
    let v = cg_solve(&system, &b, opts.rel_tol, opts.cg)?;
    // V is exactly zero at Dirichlet nodes, so U = V + T is exactly T there.
    let u = v.iter().map(|vk| vk + t_boundary).collect();
    ScalarField::from_values(grid, u)
}

/// Extension onto the whole square: keep `u` at active and frame nodes,
/// overwrite hole nodes with `fill`. Filling with the boundary temperature
/// leaves no jump across hole boundaries.
///
/// Panics if `u` and `mask` live on different grids.
pub fn extend_into_holes(u: &ScalarField, mask: &DomainMask, fill: f64) -> ScalarField {
    assert_eq!(
        u.grid(),
        mask.grid(),
        "field and mask must share a grid"
    );
    let mut out = u.clone();
    for (value, class) in out.values_mut().iter_mut().zip(mask.classes()) {
        if *class == NodeClass::HoleDirichlet {
            *value = fill;
        }
    }
    out
}
