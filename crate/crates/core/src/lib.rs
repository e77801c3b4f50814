//! Additive decompositions of planar norms, their L1 embeddings, and exact
//! checks of the inequalities that follow from them.

pub mod cf_moments;
pub mod decompose;
pub mod error;
pub mod inequalities;
pub mod interp;
pub mod measure;
pub mod norm_model;
pub mod profile;
pub mod quadrature;
pub mod rand_vectors;
pub mod special;

pub use error::{Error, Result};
pub use measure::{measure_from_profile, Atom, RepresentingMeasure};
pub use norm_model::{Functional2, NormSpec, Vec2, VecD};
pub use profile::{profile_from_norm, ConvexProfile, ProfileOptions};
pub use quadrature::QuadratureOptions;
pub use rand_vectors::{DiscreteDistribution, RademacherInstance};
