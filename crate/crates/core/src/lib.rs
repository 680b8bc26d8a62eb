//! Numerical laboratory for convexity notions in several complex variables.

pub mod cli;
pub mod components;
pub mod convexity;
pub mod cvec;
pub mod domain;
pub mod error;
pub mod expr;
pub mod parse;
pub mod psh;
pub mod ray;
pub mod report;
pub mod reproduce;
pub mod roots;
pub mod slicing;
pub mod verdict;

pub use error::{Error, Result};
