//! Approximate fixed points of continuous self-maps of the n-simplex, by
//! combinatorial labeling on refined edgewise subdivisions.
//!
//! The pipeline: subdivide the simplex ([`simplex_grid`]), label vertices by
//! coordinate comparison with the map ([`labeling`]), follow doors between
//! cells to a fully labeled cell ([`sperner_search`]), certify and refine
//! until the residual is small ([`fixpoint_solver`]). The construction also
//! runs in reverse: any conforming labeling yields a piecewise linear map
//! whose fixed points sit at barycenters of fully labeled cells
//! ([`reverse_construction`]).

pub mod cli_io;
pub mod error;
pub mod fixpoint_solver;
pub mod labeling;
pub mod maps;
pub mod reverse_construction;
pub mod simplex_grid;
pub mod sperner_search;

pub use error::{Error, Result};
