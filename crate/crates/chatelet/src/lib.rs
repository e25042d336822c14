//! Arithmetic of Châtelet surfaces `y² + z² = F1(u,v) F2(u,v) F3(u,v)`, with `F1`, `F2`
//! linear and `F3` an irreducible quadratic form: local densities, the sums `S(X)`,
//! the rational point count `N(B)` and its predicted leading constant.

pub mod arith;
pub mod count;
pub mod densities;
pub mod forms;
pub mod localcount;
pub mod padic;
pub mod peyre;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("surface rejected: {0}")]
    NotAdmissible(String),
    #[error("computation exceeds budget: {0}")]
    Budget(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}
