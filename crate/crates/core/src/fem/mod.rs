//! P1 finite elements on uniform triangulations of a rectangle.

mod assembly;
mod field;
mod image;
mod mesh;
mod observation;

pub use assembly::{
    assemble_load, assemble_mass, assemble_neumann_stiffness, assemble_regularization, assemble_stiffness_nitsche,
    check_coercivity, l2_error, lump_mass, manufactured_poisson_error, COERCIVITY_CHECK_LIMIT,
    DEFAULT_NITSCHE_PENALTY, DEFAULT_REGULARIZATION_SHIFT,
};
pub use field::NodalField;
pub use image::{interpolate_image, GrayImage};
pub use mesh::{BoundaryEdge, Location, TriMesh};
pub use observation::{assemble_observation, ObservationSet};
