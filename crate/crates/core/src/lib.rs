pub mod architectures;
pub mod cli;
pub mod components;
pub mod dp;
pub mod ems;
pub mod error;
pub mod maps;
pub mod mission;

pub use error::{Error, Result};
