// `!(x > 0.0)` is the idiom here for rejecting NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abp;
pub mod cli;
pub mod error;
pub mod func;
pub mod manifold;
pub mod ode;
pub mod odecmp;
pub mod profiles;
pub mod quad;
pub mod report;
pub mod setup;
pub mod sobolev;
pub mod volume;
