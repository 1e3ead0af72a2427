//! Dense arithmetic for homogeneous multivariate polynomials.

mod form;
mod monomial;
mod subspace;

pub use form::{Form, FormJson, TermJson};
pub use monomial::{binomial, monomial_basis, monomial_count, monomial_index, ExponentVec, MonomialBasis, ProductTable};
pub use subspace::{degree_d_products, product_columns, product_rank, Subspace};
