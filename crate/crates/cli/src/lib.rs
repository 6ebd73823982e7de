//! Command-line front end and experiment runner for network stability bounds.

pub mod builders;
pub mod distances;
pub mod experiment;
pub mod ranking;
