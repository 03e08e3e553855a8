// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlations;
pub mod davies;
pub mod error;
pub mod fock;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod model;
pub mod polymer;
pub mod quad;
pub mod vanhove;
