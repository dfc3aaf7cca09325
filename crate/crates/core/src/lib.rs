pub mod arith;
pub mod ca;
pub mod error;
pub mod exceptions;
pub mod families;
pub mod fixed;
pub mod highprec;
pub mod par;
pub mod primes;
pub mod scan;

pub use error::{Error, Result};
