//! Port-Lagrangian simulation of simple thermodynamic systems with linear
//! velocity constraints, built on induced Dirac structures.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: subspaces, annihilators, presymplectic forms and Dirac
//!   structures in finite dimension.
//! - [`model`]: the [`ThermoModel`] trait and the constraint sets derived
//!   from a Lagrangian, friction force and constraint one-forms.
//! - [`dynamics`]: KKT assembly, time stepping and Dirac residuals for
//!   closed systems.
//! - [`open`]: ports and heat sources for open systems.
//! - [`builtin`]: ready-made models.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod builtin;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod open;
#[cfg(test)]
mod testing;

pub use dynamics::{
    simulate, PontryaginPoint, PontryaginRate, Scheme, SimOptions, Tolerances, Trajectory,
};
pub use error::{Error, Result};
pub use linalg::{LinearDiracDescriptor, PresymplecticForm, Subspace};
pub use model::{Phase, ThermoModel};
pub use open::{open_simulate, OpenModel};
