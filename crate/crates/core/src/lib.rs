//! Exact b-divisor calculus on surfaces.
//!
//! Divisorial valuations are chains of point blow-ups over an abstract curve
//! configuration. On top of that sit Cartier b-divisors with their partial
//! discrepancy, the irregularity b-divisor of exponential-type connections,
//! closed-form characteristic cycles and Euler characteristics, and the
//! explicit bound polynomials with validators.

pub mod bdivisor;
pub mod bounds;
pub mod charcycle;
pub mod connection;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod geometry;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod valtree;

/// Exact rational scalar used for every divisor coefficient.
pub type Q = num_rational::Ratio<i64>;

pub use error::{Error, Result};
pub use exec::Execution;

/// Formats a rational as `n` or `n/d`.
pub fn q_str(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
