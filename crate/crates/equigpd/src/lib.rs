//! Finite groupoids with a `Z/2` involution as a model of dependent type
//! theory: projective fibrations, dependent products, a classifying universe,
//! and the homotopy-level decision procedures, all by exhaustive finite
//! computation.
//!
//! The headline demos reproduce, at desk scale, the failure of univalence and
//! of function extensionality in this model; see [`universe::funext_demo`]
//! and [`universe::univalence_check`].

pub mod budget;
pub mod error;
mod exec;
pub mod gpd;
pub mod homotopy;
pub mod io;
pub mod model;
pub mod sampling;
pub mod search;
pub mod ttfc;
pub mod universe;

pub use budget::Budget;
pub use error::{Error, Result};
pub use gpd::{
    EquivariantFunctor, FiniteGroupoid, InvolutiveGroupoid, MorId, ObjId, ValidationReport,
};
