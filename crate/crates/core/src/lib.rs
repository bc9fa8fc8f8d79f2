//! Numerical laboratory for the fractional semilinear heat equation
//! `∂_t u + (-Δ)^{θ/2} u = u^p` on open sets with zero exterior data.

pub mod error;
pub mod calibration;
pub mod config;
pub mod criteria;
pub mod dirichlet;
pub mod geometry;
pub mod inequality;
pub mod lab;
pub mod measures;
pub mod picard;
pub mod quad;
pub mod special;
pub mod stable;

pub use error::{Error, Result};
