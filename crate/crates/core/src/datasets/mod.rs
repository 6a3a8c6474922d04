//! Benchmark generators and reference solvers.
mod forcing;
mod io;
mod meshgen;
mod ode;
mod pde;
mod poisson;
mod tasks;

pub use forcing::{
    generate_forcing_1d, ForcingKind, ForcingSpec, FORCING_OMEGA, TEST_AMPLITUDE, TRAIN_AMPLITUDE,
};
pub use io::{
    read_array, read_split, write_array, write_split, Array, DomainSpec, Manifest, Split,
    SplitFiles, ARRAY_MAGIC, MANIFEST_FILE,
};
pub use meshgen::{
    delaunay_rectangle, delaunay_rectangle_with, ellipsoid, grid_rectangle, icosphere,
    noisy_remesh, periodic_strip, torus, toy_shape_classification_set, ShapeClass,
};
pub use ode::{integrate_system, rk4_integrate, OdeSystem, DIVERGENCE_LIMIT};
pub use pde::{
    solve_beam_2d, solve_diffusion_2d, solve_reaction_diffusion_2d, SpaceTimeGrid,
    INSTABILITY_LIMIT,
};
pub use poisson::{
    solve_poisson_mesh, source_field, unit_square_boundary, GaussianSource, HeatSmoother,
    PoissonSolver, BOUNDARY_TOLERANCE,
};
pub use tasks::{
    generate, generate_dataset, task_grid, write_dataset, GeneratedDataset, Profile, Task,
    FORCING_COUNTS, HEAT_STEPS, HEAT_TAU, POISSON_SOURCES, SERIES_HORIZON, SERIES_LENGTH,
    VALIDATION_FRACTION,
};
