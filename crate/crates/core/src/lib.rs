//! Density-function navigation in dynamic environments.
//!
//! Analytic time-varying density fields, gradient feedback laws for several
//! robot models, a fixed-step simulator with safety monitors and a sampled
//! certification suite.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod control;
pub mod density;
pub mod ode;
pub mod path;
pub mod robots;
pub mod sim;
pub mod smoothfn;
