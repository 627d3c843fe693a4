//! Kernel of a Cartesian cubical computational type theory.
//!
//! The modules build on one another in order: [`syntax`] fixes the language,
//! [`dynamics`] runs it, [`semantics`] decides judgments by evaluation where
//! that is finitely possible, [`refiner`] is the proof refinement logic and
//! [`tactics`] composes its rules.

pub mod dynamics;
pub mod pretty;
pub mod refiner;
pub mod semantics;
pub mod syntax;
pub mod tactics;
#[cfg(feature = "testing")]
pub mod testing;

pub use syntax::{DimExpr, DimSubst, GoalId, Name, Term};
