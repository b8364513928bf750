//! Combinatorial machinery for strong accessibility of hierarchies.

pub mod complex;
pub mod cones;
pub mod cutpoint;
pub mod dot;
pub mod dsu;
pub mod error;
pub mod fixture;
pub mod gog;
pub mod group;
pub mod hierarchy;
pub mod pipeline;
pub mod resolution;
pub mod stability;
pub mod structure;
pub mod tracks;
pub mod tree;
pub mod z2;

pub use complex::{Cell, CellLabel, Complex2, H1Report};
pub use error::{Error, Result};
pub use group::{GroupRef, GroupRegistry, TRIVIAL};
pub use tree::{ActionClass, ActionDescriptor, Point, TreeHat};
pub use gog::{GraphOfGroups, VertexKind};
pub use fixture::Fixture;
pub use pipeline::{run_pipeline, PipelineConfig, RunReport, Script};
pub use structure::HStructure;
