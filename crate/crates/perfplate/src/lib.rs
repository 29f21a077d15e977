//! Steady-state Dirichlet solvers for a plate punched by a periodic lattice
//! of tiny circular holes, and for the homogenized limit problem that
//! replaces the holes with a zeroth-order absorption term.
//!
//! The punched plate holds temperature `T` on its outer frame and on every
//! hole boundary while heat sources of density `f` act on the surface:
//! `-lap U = f` on the punched domain. As the lattice period `eps` shrinks
//! with hole radius `exp(-c0 / eps^2)`, the solutions approach the solution
//! of `-lap U + mu U = f + mu T` on the full square with `mu = pi / (2 c0)`.
//! This crate solves both sides of that limit on the same grid and measures
//! the distance between them:
//!
//! * [`field`] - grids, node fields, domain masks, discrete norms.
//! * [`multigrid`] - V-cycle Poisson solver with zero Dirichlet boundary.
//! * [`homogenized`] - the limit problem via fixed-point multigrid iteration
//!   plus an independent conjugate-gradient oracle.
//! * [`perforated`] - hole geometry, masked solve, extension into the holes.
//! * [`report`] - discrepancy sweeps, the published-table reproduction, the
//!   unit-convention calibration, CSV/JSON output.

pub mod cg;
pub mod error;
pub mod field;
pub mod homogenized;
pub mod multigrid;
pub mod perforated;
pub mod report;

pub use error::{Error, Result};
pub use field::{field_axpy, DomainMask, Grid2D, NodeClass, NormKind, ScalarField};
pub use homogenized::{
    assemble_temperature, default_stop_tol, fixed_point_solve, helmholtz_cg, helmholtz_cg_solve,
    mu_from_c0, HomogenizedProblem, IterationTrace,
};
pub use multigrid::{laplacian_apply, mg_solve, smallest_laplacian_eigenvalue, MgConfig};
pub use perforated::{
    build_mask, extend_into_holes, solve_on_mask, solve_perforated, PerforatedOptions,
    PerforationSpec,
};
pub use report::{
    calibrate_convention, discrepancy, parse_table_csv, reproduce_table1, run_sweep, sweep_json,
    table_csv_full, table_csv_rounded, trace_csv, CalibrationReport, SweepOptions, SweepOutput,
    SweepResult,
};
