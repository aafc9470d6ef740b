//! Stable mixing of kicked cat maps on the 2-torus, in exact arithmetic.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod euclid;
pub mod growth;
pub mod mixing;
pub mod qmorph;
pub mod sl2core;

mod serde_util;
