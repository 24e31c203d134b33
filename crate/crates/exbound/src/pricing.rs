//! Closed-form European prices and distribution functions.
//!
//! The Black–Scholes–Merton formulas here feed the shout/British payoffs
//! and the difference-quotient bonus estimates. Pricing exactly at expiry
//! is refused: the d-terms degenerate there, and the payoff is the
//! caller's job.

use crate::erf;
use crate::error::{Error, Result};
use crate::market::{MarketParams, OptionSide, StrategyLeg};

/// A Black–Scholes valuation with the probabilities it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsQuote {
    pub price: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Standard normal cumulative distribution function.
///
/// Built on `erfc` so both tails keep full relative accuracy; absolute
/// error is below 1e-15 everywhere.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

fn check_pricing_inputs(spot: f64, strike: f64, t: f64, expiry: f64) -> Result<f64> {
    if !spot.is_finite() || spot <= 0.0 {
        return Err(Error::OutOfRange(format!("spot must be > 0, got {spot}")));
    }
    if !strike.is_finite() || strike <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "strike must be > 0, got {strike}"
        )));
    }
    if !t.is_finite() || t >= expiry {
        return Err(Error::OutOfRange(format!(
            "pricing requires t < expiry, got t = {t}, expiry = {expiry}; use the payoff at expiry"
        )));
    }
    Ok(expiry - t)
}

/// European call under Black–Scholes–Merton:
/// `e^(-q tau) S Phi(d1) - e^(-r tau) X Phi(d2)`.
pub fn bs_call(
    params: &MarketParams,
    t: f64,
    spot: f64,
    strike: f64,
    expiry: f64,
) -> Result<BsQuote> {
    let tau = check_pricing_inputs(spot, strike, t, expiry)?;
    let vol = params.sigma * tau.sqrt();
    let d1 = ((spot / strike).ln()
        + (params.rate - params.dividend_yield + 0.5 * params.sigma * params.sigma) * tau)
        / vol;
    let d2 = d1 - vol;
    let price = (-params.dividend_yield * tau).exp() * spot * normal_cdf(d1)
        - (-params.rate * tau).exp() * strike * normal_cdf(d2);
    Ok(BsQuote {
        price: price.max(0.0),
        d1,
        d2,
    })
}

/// European put, the mirror of [`bs_call`].
pub fn bs_put(
    params: &MarketParams,
    t: f64,
    spot: f64,
    strike: f64,
    expiry: f64,
) -> Result<BsQuote> {
    let tau = check_pricing_inputs(spot, strike, t, expiry)?;
    let vol = params.sigma * tau.sqrt();
    let d1 = ((spot / strike).ln()
        + (params.rate - params.dividend_yield + 0.5 * params.sigma * params.sigma) * tau)
        / vol;
    let d2 = d1 - vol;
    let price = (-params.rate * tau).exp() * strike * normal_cdf(-d2)
        - (-params.dividend_yield * tau).exp() * spot * normal_cdf(-d1);
    Ok(BsQuote {
        price: price.max(0.0),
        d1,
        d2,
    })
}

/// Value of a call strategy: the weighted sum of its vanilla legs.
pub fn strategy_price(
    params: &MarketParams,
    t: f64,
    spot: f64,
    legs: &[StrategyLeg],
    expiry: f64,
) -> Result<f64> {
    if legs.is_empty() {
        return Err(Error::InvalidSpec("strategy needs at least one leg".into()));
    }
    let mut total = 0.0;
    for leg in legs {
        total += leg.weight * bs_call(params, t, spot, leg.strike, expiry)?.price;
    }
    Ok(total)
}

/// Early-exercise payoff of the British option: the Black–Scholes shape
/// evaluated under the contract drift `mu_c` with no discounting,
///
/// ```text
/// call: e^(mu_c tau) S Phi(d^mu) - X Phi(d^mu - sigma sqrt(tau))
/// ```
///
/// where `d^mu = (ln(S/X) + (mu_c + sigma^2/2) tau) / (sigma sqrt(tau))`.
pub fn british_payoff(
    params: &MarketParams,
    contract_drift: f64,
    t: f64,
    spot: f64,
    strike: f64,
    expiry: f64,
    side: OptionSide,
) -> Result<f64> {
    let tau = check_pricing_inputs(spot, strike, t, expiry)?;
    if !contract_drift.is_finite() {
        return Err(Error::OutOfRange("contract drift must be finite".into()));
    }
    let vol = params.sigma * tau.sqrt();
    let d = ((spot / strike).ln() + (contract_drift + 0.5 * params.sigma * params.sigma) * tau)
        / vol;
    let grown_spot = (contract_drift * tau).exp() * spot;
    let value = match side {
        OptionSide::Call => grown_spot * normal_cdf(d) - strike * normal_cdf(d - vol),
        OptionSide::Put => strike * normal_cdf(-d + vol) - grown_spot * normal_cdf(-d),
    };
    Ok(value.max(0.0))
}
