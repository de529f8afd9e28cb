//! POD-Galerkin reduced-order model: sampling, snapshots, bases, projection.

mod pod;
mod reduced;
mod sampling;
mod snapshots;

pub use pod::{apply_mass, pod, PodBasis, RANK_TOL};
pub use reduced::{
    enrich, project, reconstruct, relative_error, relative_field_error, solve_reduced, solve_rom,
    ReducedSolution, ReducedSystem, RomBasis,
};
pub use sampling::{sample_parameters, ParameterBox, Sampling};
pub use snapshots::{
    collect_snapshots, element_gradients, supremizer, supremizer_snapshots, Snapshots,
};
