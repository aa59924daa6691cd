//! Synthetic fracture-edge generation and edge matching for fragmented slips.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`physics`] breaks a slip across its fiber bundles and corrodes both
//!    fracture edges, producing complementary upper/lower pairs.
//! 2. [`features`] turns a height profile into a 64-d mean-centered vector.
//! 3. [`matcher`] trains a triplet embedding network on synthetic pairs and
//!    scores candidates with a (0, 1] confidence.
//! 4. [`calibration`] tunes the physics parameters with a genetic algorithm so
//!    generated edges are indistinguishable from a reference set.
//! 5. [`evaluation`] ranks candidate pools and reports Top-k accuracy against
//!    the classical [`baselines`].
//!
//! Everything that touches disk lives in [`datastore`].

pub mod baselines;
pub mod calibration;
pub mod datastore;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod matcher;
pub mod physics;

pub use error::{Error, Result};
