//! Lelong numbers, jumping-number filtrations and flat limits for
//! S¹-invariant hermitian metric families over the half-plane.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod error;
pub mod family;
pub mod filtration;
pub mod fit;
pub mod openness;
pub mod flow;
pub mod hermitian;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
