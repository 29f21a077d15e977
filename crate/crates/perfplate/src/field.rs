//! Grids, node fields, domain masks and the discrete norms used everywhere else.

use crate::error::{Error, Result};

/// Uniform node-centered grid on the unit square.
///
/// `n` cells per side, spacing `h = 1/n`, nodes `(i, j)` with
/// `0 <= i, j <= n` at coordinates `(i*h, j*h)`. `i` is the x (column)
/// index, `j` the y (row) index; node storage is row-major in `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    n: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 2 cells per side, got n = {n}"
            )));
        }
        Ok(Self {
            n,
            h: 1.0 / n as f64,
        })
    }

    /// Cells per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing `h = 1/n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Nodes per side (`n + 1`).
    #[inline]
    pub fn nodes_per_side(&self) -> usize {
        self.n + 1
    }

    /// Total node count `(n + 1)^2`.
    #[inline]
    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Flat index of node `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Coordinates `(x, y) = (i*h, j*h)` of node `(i, j)`.
    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// True for nodes on the outer frame of the square.
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }
}

/// Which discrete norm [`ScalarField::norm`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// `max |v|` over all nodes.
    Linf,
    /// `sqrt(h^2 * sum v^2)` over all nodes.
    L2h,
    /// `sqrt(L2h^2 + h^2 * sum ((dv)/h)^2)` with forward differences over
    /// every adjacent node pair in both directions.
    H1h,
}

/// Real values on the nodes of a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let side = grid.nodes_per_side();
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..side {
            for i in 0..side {
                let (x, y) = grid.coord(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} node values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Add `value` to every node.
    pub fn shifted(&self, value: f64) -> Self {
        let values = self.values.iter().map(|v| v + value).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Multiply every node by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let values = self.values.iter().map(|v| factor * v).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Linf => self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            NormKind::L2h => {
                let h = self.grid.spacing();
                (h * h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
            }
            NormKind::H1h => {
                let h = self.grid.spacing();
                let side = self.grid.nodes_per_side();
                let l2_sq = h * h * self.values.iter().map(|v| v * v).sum::<f64>();
                let mut grad_sq = 0.0;
                for j in 0..side {
                    for i in 0..side - 1 {
                        let d = (self.get(i + 1, j) - self.get(i, j)) / h;
                        grad_sq += d * d;
                    }
                }
                for j in 0..side - 1 {
                    for i in 0..side {
                        let d = (self.get(i, j + 1) - self.get(i, j)) / h;
                        grad_sq += d * d;
                    }
                }
                (l2_sq + h * h * grad_sq).sqrt()
            }
        }
    }

    /// Plain Euclidean distance `sqrt(sum (a - b)^2)` over all nodes,
    /// no `h` weighting.
    pub fn euclidean_distance(&self, other: &Self) -> Result<f64> {
        check_same_grid(self, other)?;
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum.sqrt())
    }
}

fn check_same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::ShapeMismatch(format!(
            "fields live on different grids (n = {} vs n = {})",
            a.grid.n(),
            b.grid.n()
        )));
    }
    Ok(())
}

/// `a*x + y`, element-wise. The two fields must share a grid.
pub fn field_axpy(a: f64, x: &ScalarField, y: &ScalarField) -> Result<ScalarField> {
    check_same_grid(x, y)?;
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(xv, yv)| a * xv + yv)
        .collect();
    Ok(ScalarField {
        grid: x.grid,
        values,
    })
}

/// Per-node classification of the computational domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    /// Unknown solved for.
    Active,
    /// Outer frame of the square, value pinned to the boundary datum.
    OuterDirichlet,
    /// Node covered by a hole (boundary or interior), value pinned.
    HoleDirichlet,
}

/// Node classification realizing the punched domain: the square minus the
/// union of holes. Construction validates that the outer frame is entirely
/// outer-Dirichlet, holes stay strictly inside, and at least one active
/// node remains.
#[derive(Clone, Debug)]
pub struct DomainMask {
    grid: Grid2D,
    classes: Vec<NodeClass>,
}

impl DomainMask {
    pub fn new(grid: Grid2D, classes: Vec<NodeClass>) -> Result<Self> {
        if classes.len() != grid.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} node classes, got {}",
                grid.node_count(),
                classes.len()
            )));
        }
        let side = grid.nodes_per_side();
        let mut active = 0usize;
        for j in 0..side {
            for i in 0..side {
                let class = classes[grid.idx(i, j)];
                if grid.is_boundary(i, j) {
                    if class != NodeClass::OuterDirichlet {
                        return Err(Error::InvalidConfig(format!(
                            "frame node ({i}, {j}) must be outer-Dirichlet"
                        )));
                    }
                } else if class == NodeClass::OuterDirichlet {
                    return Err(Error::InvalidConfig(format!(
                        "interior node ({i}, {j}) marked outer-Dirichlet"
                    )));
                }
                if class == NodeClass::Active {
                    active += 1;
                }
            }
        }
        if active == 0 {
            return Err(Error::DegenerateDomain);
        }
        Ok(Self { grid, classes })
    }

    /// Mask with no holes: frame outer-Dirichlet, everything else active.
    pub fn unperforated(grid: Grid2D) -> Self {
        let side = grid.nodes_per_side();
        let mut classes = vec![NodeClass::Active; grid.node_count()];
        for j in 0..side {
            for i in 0..side {
                if grid.is_boundary(i, j) {
                    classes[grid.idx(i, j)] = NodeClass::OuterDirichlet;
                }
            }
        }
        Self { grid, classes }
    }

    #[inline]
    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        self.classes[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn active_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| **c == NodeClass::Active)
            .count()
    }

    pub fn hole_node_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| **c == NodeClass::HoleDirichlet)
            .count()
    }

    /// True where the node is an unknown.
    pub fn active_flags(&self) -> Vec<bool> {
        self.classes
            .iter()
            .map(|c| *c == NodeClass::Active)
            .collect()
    }
}

/// A square symmetry as an index map `(i, j, n) -> (i', j')`.
pub type NodeSymmetry = fn(usize, usize, usize) -> (usize, usize);

/// The eight symmetries of the square acting on node indices.
pub const SQUARE_SYMMETRIES: [NodeSymmetry; 8] = [
    |i, j, _n| (i, j),
    |i, j, n| (n - i, j),
    |i, j, n| (i, n - j),
    |i, j, n| (n - i, n - j),
    |i, j, _n| (j, i),
    |i, j, n| (n - j, n - i),
    |i, j, n| (j, n - i),
    |i, j, n| (n - j, i),
];

/// Largest pointwise deviation of `field` from its image under any of the
/// eight square symmetries. Zero means the field is exactly symmetric.
pub fn symmetry_deviation(field: &ScalarField) -> f64 {
    let n = field.grid().n();
    let side = field.grid().nodes_per_side();
    let mut worst = 0.0f64;
    for sym in &SQUARE_SYMMETRIES[1..] {
        for j in 0..side {
            for i in 0..side {
                let (si, sj) = sym(i, j, n);
                worst = worst.max((field.get(i, j) - field.get(si, sj)).abs());
            }
        }
    }
    worst
}
