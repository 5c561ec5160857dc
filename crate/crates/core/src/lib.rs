//! Determinantal point processes on spheres and Euclidean space: kernels,
//! exact samplers, quadrature of linear-statistic variances, nonlocal norm
//! limits and the associated empirical statistics.

pub mod cli;
pub mod dpp_sampler;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod kernels;
pub mod norm_limits;
pub mod par;
pub mod quadrature;
pub mod specfun;
pub mod sphere_geom;
pub mod statistics;

pub use error::{Error, Result};
