//! Normative modeling with a conditional variational autoencoder and an
//! adversarial focal-loss discriminator.
//!
//! The model is fit on healthy-control subjects only; held-out subjects are
//! scored by their reconstruction deviation, which drives both
//! case/control detection and the ranking of affected regions.

pub mod data;
pub mod eval;
pub mod io;
pub mod model;
pub mod nn;
