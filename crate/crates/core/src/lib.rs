//! Numerical toolkit for the local Blaschke–Kakutani and Banach
//! classification of convex bodies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banach;
pub mod bodies;
pub mod classifier;
pub mod contracting;
pub mod linalg;
pub mod quadform;
