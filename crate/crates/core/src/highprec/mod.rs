//! Certified real arithmetic.

mod consts;
mod dyadic;
mod interval;
pub(crate) mod kernels;

pub use consts::{euler_gamma, exp_gamma, MIN_GAMMA_DIGITS};
pub use dyadic::{Dyadic, Round};
pub use interval::{
    compare, compare_refining, digits_to_bits, parse_decimal, parse_ratio, CertifiedOrder,
    IntervalReal, DEFAULT_DIGITS,
};
