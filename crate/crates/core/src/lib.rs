//! Analysis of Constraint Handling Rules over constants with `=` as the only
//! built-in: a reference interpreter for ω_t and ω_o, the well-quasi-order on
//! configurations, sc-forests with reactive sequences, and decision
//! procedures for divergence and for the existence of a terminating run.

pub mod syntax;
pub mod store;
pub mod engine;
pub mod wqo;
pub mod forest;
pub mod decide;
pub mod oracle;
