//! Binary Gibbs random fields on lattice tori.
//!
//! The crate covers torus geometry ([`lattice`]), the calculus of local
//! configurations ([`configs`]), exact enumeration of the Gibbs measure at
//! small sizes ([`measure`]), heat-bath Monte Carlo ([`sampler`]), detectors
//! and bounds for occurrences of local configurations ([`geography`]), the
//! block construction used to study ubiquity ([`ubiquity`]) and a
//! scenario-driven experiment runner ([`experiment`]).

pub mod configs;
pub mod error;
pub mod event;
pub mod experiment;
pub mod field;
pub mod geography;
pub mod lattice;
pub mod measure;
pub mod sampler;
pub mod stats;
pub mod ubiquity;

pub use configs::{GibbsParams, LocalConfig, LocalFrame, PatchConfig, WeightMode};
pub use error::{Error, Result};
pub use event::EventPredicate;
pub use field::SpinField;
pub use lattice::{Lattice, LatticeSpec, Norm, Vertex};
