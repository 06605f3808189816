//! Null-string analysis of 4-dimensional para-Kähler / Walker / Plebański
//! geometries: jets, a small expression language, frames, curvature,
//! Petrov-Penrose classification and congruence optics.

// Tensor code indexes several arrays with the same loop variables.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod classify;
pub mod congruence;
pub mod curvature;
pub mod dsl;
pub mod error;
pub mod frame;
pub mod jet;

pub use error::{Error, Result, Span};
pub use jet::{Jet, Mode, MultiIndex, Scalar};
