//! Powers-of-forms decomposition.
//!
//! Given `f2 = sum_i lambda_i q_i^2` and `f3 = sum_i lambda_i q_i^3` for
//! unknown `k`-forms `q_i`, recover the pairs `(q_i, lambda_i)` by computing
//! the sum-of-squares support of `f2` with a semidefinite program, lifting both
//! forms into coordinates on that support and running Jennrich's algorithm.
//! Certificates report when the recovered decomposition is provably unique.
//!
//! Layers, bottom up:
//! - [`poly`]: dense forms, products, subspaces of forms.
//! - [`sdp`]: interior-point solver returning relative-interior points.
//! - [`gram`]: Gram problems, support, face dimension and dual certificates.
//! - [`jennrich`]: joint decomposition of a quadratic/cubic pair.
//! - [`pipeline`]: the end-to-end decomposition.
//! - [`instances`]: generators, conjecture families and the uniqueness study.
//! - [`gmm`]: Gaussian mixture and union-of-subspaces recovery from moments.

// NaN-rejecting comparisons are written as `!(x > y)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gmm;
pub mod gram;
pub mod instances;
pub mod jennrich;
pub mod linalg;
pub mod pipeline;
pub mod poly;
pub mod sdp;

pub use config::{Config, SolverConfig, TraceConvention};
pub use error::{Error, Result};
pub use poly::{Form, Subspace};
