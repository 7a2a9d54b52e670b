//! Semi-supervised partial-membership LDA (sPM-LDA) for hyperspectral
//! unmixing.
//!
//! The crate covers the whole workflow:
//!
//! 1. [`superpixel`]: hyperspectral SLIC over-segmentation, then merging of
//!    superpixels that overlap map polygons.
//! 2. [`supervision`]: a binary `K x C` matrix saying which endmembers each
//!    superpixel may contain.
//! 3. [`inference`]: a Metropolis-within-Gibbs sampler for the
//!    partial-membership topic model under the Normal Compositional Model,
//!    with label-masked proposals.
//!
//! [`metrics`] scores the resulting proportion maps, [`synthgen`] draws
//! scenes with known ground truth, and [`pipeline`] strings the stages
//! together behind the `spmlda` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod superpixel;
pub mod supervision;
pub mod synthgen;

pub use error::{Error, Result};
