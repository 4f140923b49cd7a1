pub mod cli;
pub mod config;
pub mod difference;
pub mod dirichlet;
pub mod error;
pub mod freekernel;
pub mod interp;
pub mod quad;
pub mod renewal;
pub mod report;
pub mod special;
pub mod symbols;

pub use error::{Error, Result};
