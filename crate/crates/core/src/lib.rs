//! Reconstruction of coherent germs in Besov scales.
//!
//! A germ is a family `x -> F_x` of distributions that approximate an unknown
//! global distribution near each base point. This crate builds that global
//! distribution through a dyadic mollification series, estimates the
//! coherence, homogeneity and Besov norms that control it, and uses the
//! construction to multiply distributions of negative regularity by
//! sufficiently regular functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod germ;
pub mod grid;
pub mod norms;
pub mod reconstruct;
pub mod signals;
pub mod testfn;
pub mod young;

pub use error::{Error, Result};
