//! Invariant measures of noisy one-dimensional maps.

pub mod cli;
pub mod kernel;
pub mod matpow;
pub mod numerics;
pub mod taylor;
pub mod tmembed;
pub mod transfer;
