//! Stratified Lie algebras, Carnot group geometry and the numerics built on
//! them: exterior calculus on left-invariant forms, sampled mappings,
//! oriented sphere integrals and homogeneous box counting.

pub mod algebra;
pub mod dimension;
pub mod error;
pub mod exterior;
pub mod grid;
pub mod group;
pub mod linalg;
mod parallel;
pub mod poly;
pub mod scalar;
pub mod sphere;

pub use error::{Error, Result};
pub use parallel::configure_threads;
