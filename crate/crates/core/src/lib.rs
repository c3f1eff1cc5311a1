//! Generalized Orlicz premia on finite probability spaces.
//!
//! The premium of a nonnegative position `X` under an Orlicz function `Φ` is
//!
//! ```text
//! H_Φ(X) = inf { k > 0 : E[Φ(X/k)] ≤ 1 }
//! ```
//!
//! where `Φ` need not be convex: the geometric mean, `L^p` norms with
//! `0 < p < 1`, quantiles, expectiles and `L^p`-quantiles all fit the same
//! template. On top of the premium this crate provides the
//! Haezendonck–Goovaerts construction, arithmetic and geometric dual
//! representations with their penalty functions, and seeded property suites
//! that check the structural results numerically.
//!
//! Module map:
//!
//! - [`orlicz`]: Orlicz functions, validation, convexity flags, conjugates.
//! - [`prob`]: finite spaces, random variables, distributions, quantiles.
//! - [`premium`]: the premium solver and closed-form special cases.
//! - [`dual`]: penalty functions, certificates and simplex-grid searches.
//! - [`hg`]: the Haezendonck–Goovaerts risk measure.
//! - [`harness`]: randomized verification suites.

pub mod dual;
pub mod error;
pub mod extended;
pub mod harness;
pub mod hg;
pub mod numeric;
pub mod orlicz;
pub mod premium;
pub mod prob;

pub use error::{OrliczError, Result};
pub use extended::ExtendedReal;
pub use orlicz::{Family, OrliczFunction, TriState, ValidationReport};
pub use premium::{orlicz_premium, PremiumResult, Route, DEFAULT_TOL};
pub use prob::{DiscreteDistribution, FiniteProbabilitySpace, MeasureChange, RandomVariable};
