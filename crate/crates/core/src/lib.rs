//! Relative heat traces, zeta-regularized relative determinants and
//! conformal extremal metrics on surfaces with hyperbolic cusps.
//!
//! The modules follow the computation: [`cusp_model`] gives exact traces for
//! the one-dimensional cusp operators, [`trace_expansion`] packages traces
//! with their small-t structure, [`zeta_det`] turns a trace into `ζ′(0)` and a
//! determinant, [`surface`] holds discrete surfaces and conformal changes, and
//! [`polyakov`] evaluates and minimizes the conformal functionals.
//! The runnable programs in `examples/` show each piece in use.

pub mod cli;
pub mod cusp_model;
pub mod error;
pub mod output;
pub mod polyakov;
pub mod quadrature;
pub mod special;
pub mod surface;
pub mod trace_expansion;
pub mod zeta_det;

pub use error::{Error, Result};
