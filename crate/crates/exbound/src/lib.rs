//! Early exercise boundaries of American-style derivatives at expiry.
//!
//! The crate computes the limit of the early exercise boundary at expiry
//! analytically, by building the exercise bonus function of a derivative
//! and extracting the boundary of its positive set, and numerically, by
//! solving the Black–Scholes obstacle problem with projected SOR on a
//! short horizon and reading the boundary off the discrete active set.
//!
//! Modules:
//!
//! - [`market`]: market parameters, payoffs and the derivative catalogue.
//! - [`pricing`]: closed-form European prices and the normal CDF.
//! - [`bonus`]: the exercise bonus function at expiry, built symbolically
//!   from the pricing generator and numerically from a time-derivative
//!   difference quotient.
//! - [`boundary`]: boundary extraction, closed-form boundary formulas and
//!   the transcendental root solver for averaged underlyings.
//! - [`psor`]: the projected SOR verifier for spot-payoff derivatives.
//!
//! ```
//! use exbound::boundary::{extract_boundary, vanilla_boundary, BoundarySet};
//! use exbound::bonus::bonus_symbolic;
//! use exbound::market::{DerivativeSpec, MarketParams, OptionSide};
//!
//! let params = MarketParams::new(0.03, 0.02, 0.30)?;
//!
//! // Closed form: a call exercises early above max[X, (r/q) X].
//! let boundary = vanilla_boundary(&params, OptionSide::Call, 1.0)?;
//! assert_eq!(boundary, BoundarySet::SpotPoints(vec![1.5]));
//!
//! // Same point from the generic route: build the exercise bonus and
//! // take the boundary of its positive set.
//! let spec = DerivativeSpec::vanilla_call(1.0, 1.0)?;
//! let generic = extract_boundary(&bonus_symbolic(&spec, &params)?)?;
//! assert_eq!(generic, boundary);
//! # Ok::<(), exbound::Error>(())
//! ```

pub mod bonus;
pub mod boundary;
mod erf;
pub mod error;
pub mod market;
pub mod pricing;
pub mod psor;

pub use error::{Error, Result};
