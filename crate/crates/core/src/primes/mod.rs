//! Prime generation and the Mertens/Chebyshev accumulations.

mod beta;
mod checkpoint;
mod mertens;
mod sieve;

pub use beta::{
    find_beta_max, find_beta_max_with, loglog_n_from_logsum, BetaMaxResult, BetaSearchOptions,
};
pub use checkpoint::{Checkpoint, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use mertens::{accumulate, raw_state, AccumulatorReport, Extent, MertensAccumulator};
pub use sieve::{
    for_each_prime_in_segment, isqrt, nth_prime, prime_count, primes_stream, sieve_segment,
    small_primes, BasePrimes, PrimeStream, SieveConfig, MIN_SEGMENT,
};
