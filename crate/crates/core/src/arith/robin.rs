use serde::Serialize;

use super::{sigma_over_n, Factorization};
use crate::error::Result;
use crate::highprec::{compare, exp_gamma, CertifiedOrder, IntervalReal};

/// Starting precision for the refinement loop in [`robin_check`].
const START_DIGITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobinOutcome {
    pub verdict: Verdict,
    /// Set for n = 1, 2, where log log n is undefined or negative; such n are
    /// reported as failing by convention.
    pub out_of_domain: bool,
    pub sigma_ratio: IntervalReal,
    /// `e^gamma log log n`, absent when out of domain.
    pub rhs: Option<IntervalReal>,
    pub digits_used: u32,
}

impl RobinOutcome {
    /// `rhs - sigma(n)/n`.
    pub fn margin(&self) -> Option<IntervalReal> {
        self.rhs.as_ref().map(|r| r.sub(&self.sigma_ratio))
    }
}

/// Certified verdict of `sigma(n)/n < e^gamma log log n`.
///
/// `digits` is the largest precision tried; evaluation starts lower and
/// doubles while the comparison is undecided.
pub fn robin_check(f: &Factorization, digits: u32) -> Result<RobinOutcome> {
    robin_check_scaled(f, None, digits)
}

/// Same check against `scale * e^gamma log log n`.
pub fn robin_check_scaled(
    f: &Factorization,
    scale: Option<&num_rational::BigRational>,
    digits: u32,
) -> Result<RobinOutcome> {
    let small = f.value_u128().filter(|&v| v <= 2);
    let exact_ok = f.factors().iter().all(|&(_, a)| a < 4096);
    let mut d = START_DIGITS.min(digits).max(12);
    loop {
        let ratio = if exact_ok {
            sigma_over_n(f).to_interval(d)
        } else {
            f.sigma_ratio_interval(d)?
        };
        if small.is_some() {
            return Ok(RobinOutcome {
                verdict: Verdict::Fails,
                out_of_domain: true,
                sigma_ratio: ratio,
                rhs: None,
                digits_used: d,
            });
        }
        let mut rhs = exp_gamma(d + 4)?.mul(&f.ln_value(d + 4)?.ln()?);
        if let Some(s) = scale {
            rhs = rhs.mul(&IntervalReal::from_ratio(s, d + 4));
        }
        let rhs = rhs.with_digits(d);
        let verdict = match compare(&ratio, &rhs) {
            CertifiedOrder::Less => Some(Verdict::Holds),
            CertifiedOrder::Greater => Some(Verdict::Fails),
            CertifiedOrder::Undecided if d >= digits => Some(Verdict::Undecided),
            CertifiedOrder::Undecided => None,
        };
        if let Some(verdict) = verdict {
            return Ok(RobinOutcome {
                verdict,
                out_of_domain: false,
                sigma_ratio: ratio,
                rhs: Some(rhs),
                digits_used: d,
            });
        }
        d = (d * 2).min(digits);
    }
}
