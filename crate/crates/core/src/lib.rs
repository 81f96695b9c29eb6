// Negated float comparisons are deliberate: NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod arrival;
pub mod cases;
pub mod dense;
pub mod detector;
pub mod dg;
pub mod driver;
pub mod error;
pub mod fv;
pub mod mesh;
pub mod metrics;
pub mod operator;
pub mod output;
pub mod poly;
pub mod refelem;
pub mod subgrid;
pub mod timeloop;
