//! Broken-rail detection on a double-track railway section.
//!
//! `netmodel` solves the four-rail ladder network for a breakage set,
//! `signal` turns the currents into noisy Kasami-coded measurements,
//! `pca` fits one subspace model per class and `detector` runs the
//! three-phase decision. `harness` ties them into reproducible datasets.

pub mod detector;
pub mod error;
pub mod features;
pub mod harness;
pub mod netmodel;
pub mod pca;
pub mod signal;

pub use error::{Error, Result};
