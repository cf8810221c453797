//! Self-training domain adaptation with hard-class rectification.
//!
//! The pipeline trains a linear softmax classifier on a labeled source set
//! plus a growing set of pseudo-labeled target samples. Target predictions
//! are calibrated toward a prior class proportion ([`apc`]), stabilized by
//! two-view averaging with sharpening and an EMA store ([`ensemble`]), and
//! selected per class with a growing portion ([`select`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod apc;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod prob;
pub mod select;

pub use error::{Error, Result};
