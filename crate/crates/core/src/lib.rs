pub mod catalog;
pub mod cli;
pub mod contraction;
pub mod discrepancy;
pub mod dsl;
pub mod graph;
pub mod linalg;
pub mod wps;
