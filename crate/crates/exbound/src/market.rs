//! Market parameters, payoff representations and the derivative catalogue.
//!
//! Everything in here is immutable after construction and shared freely
//! across threads. Validation happens in the constructors so the rest of
//! the crate can assume well-formed inputs.

use crate::error::{Error, Result};
use crate::pricing;

/// Flat market parameters under the risk-neutral measure.
///
/// The underlying follows dS = (r - q) S dt + sigma S dW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Continuous risk-free rate, per year.
    pub rate: f64,
    /// Continuous dividend yield, per year.
    pub dividend_yield: f64,
    /// Volatility, per sqrt-year.
    pub sigma: f64,
}

impl MarketParams {
    /// Requires `sigma > 0`, `rate >= 0` and `dividend_yield >= 0`; the
    /// uniqueness of the averaged-boundary roots depends on nonnegative
    /// carry parameters.
    pub fn new(rate: f64, dividend_yield: f64, sigma: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidSpec(format!("rate must be >= 0, got {rate}")));
        }
        if !dividend_yield.is_finite() || dividend_yield < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "dividend yield must be >= 0, got {dividend_yield}"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        Ok(Self {
            rate,
            dividend_yield,
            sigma,
        })
    }
}

/// Call/put flavor shared by every two-sided contract in the catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionSide {
    Call,
    Put,
}

impl std::fmt::Display for OptionSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptionSide::Call => write!(f, "call"),
            OptionSide::Put => write!(f, "put"),
        }
    }
}

/// Power/weight parameters of the exponentially weighted running average
///
/// ```text
/// (A_t)^p = lambda / (1 - e^(-lambda t)) * int_0^t e^(-lambda (t-u)) (S_u)^p du
/// ```
///
/// The power is an extended real: `0` is the geometric average, `1` the
/// arithmetic one, `-inf`/`+inf` the running minimum/maximum. `lambda = 0`
/// is the unweighted (regular) average, taken as the analytic limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingSpec {
    pub power: f64,
    pub lambda: f64,
}

impl AveragingSpec {
    pub fn new(power: f64, lambda: f64) -> Result<Self> {
        if power.is_nan() {
            return Err(Error::InvalidSpec("averaging power must not be NaN".into()));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "averaging weight lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if power.is_infinite() && lambda > 0.0 {
            return Err(Error::InvalidSpec(
                "running min/max averages do not take an exponential weight".into(),
            ));
        }
        Ok(Self { power, lambda })
    }

    /// Continuous arithmetic average (p = 1, lambda = 0).
    pub fn arithmetic() -> Self {
        Self {
            power: 1.0,
            lambda: 0.0,
        }
    }

    /// Continuous geometric average (p = 0, lambda = 0).
    pub fn geometric() -> Self {
        Self {
            power: 0.0,
            lambda: 0.0,
        }
    }

    /// Running minimum (p = -inf).
    pub fn running_min() -> Self {
        Self {
            power: f64::NEG_INFINITY,
            lambda: 0.0,
        }
    }

    /// Running maximum (p = +inf).
    pub fn running_max() -> Self {
        Self {
            power: f64::INFINITY,
            lambda: 0.0,
        }
    }

    /// True for the running min/max sentinels.
    pub fn is_extreme(&self) -> bool {
        self.power.is_infinite()
    }
}

/// One leg of an option strategy: `weight` units of a vanilla call struck
/// at `strike`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyLeg {
    pub weight: f64,
    pub strike: f64,
}

/// The derivative catalogue.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeKind {
    VanillaCall { strike: f64 },
    VanillaPut { strike: f64 },
    /// Linear combination of vanilla calls, legs sorted by strike.
    Strategy { legs: Vec<StrategyLeg> },
    AsianCall { averaging: AveragingSpec },
    AsianPut { averaging: AveragingSpec },
    /// Floating strike on the running minimum.
    LookbackCall,
    /// Floating strike on the running maximum.
    LookbackPut,
    ShoutCall { strike: f64 },
    ShoutPut { strike: f64 },
    BritishCall { strike: f64, contract_drift: f64 },
    BritishPut { strike: f64, contract_drift: f64 },
}

impl DerivativeKind {
    /// Short name used in reports and scenario files.
    pub fn name(&self) -> &'static str {
        match self {
            DerivativeKind::VanillaCall { .. } => "vanilla-call",
            DerivativeKind::VanillaPut { .. } => "vanilla-put",
            DerivativeKind::Strategy { .. } => "strategy",
            DerivativeKind::AsianCall { .. } => "asian-call",
            DerivativeKind::AsianPut { .. } => "asian-put",
            DerivativeKind::LookbackCall => "lookback-call",
            DerivativeKind::LookbackPut => "lookback-put",
            DerivativeKind::ShoutCall { .. } => "shout-call",
            DerivativeKind::ShoutPut { .. } => "shout-put",
            DerivativeKind::BritishCall { .. } => "british-call",
            DerivativeKind::BritishPut { .. } => "british-put",
        }
    }
}

/// A derivative contract: its kind plus the expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSpec {
    pub kind: DerivativeKind,
    /// Expiry in years, strictly positive.
    pub expiry: f64,
}

fn check_strike(strike: f64) -> Result<()> {
    if !strike.is_finite() || strike <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "strike must be > 0, got {strike}"
        )));
    }
    Ok(())
}

impl DerivativeSpec {
    pub fn new(kind: DerivativeKind, expiry: f64) -> Result<Self> {
        if !expiry.is_finite() || expiry <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "expiry must be > 0, got {expiry}"
            )));
        }
        match &kind {
            DerivativeKind::VanillaCall { strike }
            | DerivativeKind::VanillaPut { strike }
            | DerivativeKind::ShoutCall { strike }
            | DerivativeKind::ShoutPut { strike } => check_strike(*strike)?,
            DerivativeKind::BritishCall {
                strike,
                contract_drift,
            }
            | DerivativeKind::BritishPut {
                strike,
                contract_drift,
            } => {
                check_strike(*strike)?;
                if !contract_drift.is_finite() {
                    return Err(Error::InvalidSpec("contract drift must be finite".into()));
                }
            }
            DerivativeKind::Strategy { legs } => {
                if legs.is_empty() {
                    return Err(Error::InvalidSpec("strategy needs at least one leg".into()));
                }
                for leg in legs {
                    check_strike(leg.strike)?;
                    if !leg.weight.is_finite() {
                        return Err(Error::InvalidSpec("leg weight must be finite".into()));
                    }
                }
                if legs.windows(2).any(|w| w[0].strike > w[1].strike) {
                    return Err(Error::InvalidSpec(
                        "strategy legs must be sorted by strike".into(),
                    ));
                }
            }
            DerivativeKind::AsianCall { .. }
            | DerivativeKind::AsianPut { .. }
            | DerivativeKind::LookbackCall
            | DerivativeKind::LookbackPut => {}
        }
        Ok(Self { kind, expiry })
    }

    pub fn vanilla_call(strike: f64, expiry: f64) -> Result<Self> {
        Self::new(DerivativeKind::VanillaCall { strike }, expiry)
    }

    pub fn vanilla_put(strike: f64, expiry: f64) -> Result<Self> {
        Self::new(DerivativeKind::VanillaPut { strike }, expiry)
    }

    /// Condor spread: long calls at the outer strikes, short at the inner
    /// ones. Requires `x1 < x2 <= x3 < x4`; `x2 == x3` is the butterfly.
    pub fn condor(strikes: [f64; 4], expiry: f64) -> Result<Self> {
        let [x1, x2, x3, x4] = strikes;
        for x in strikes {
            check_strike(x)?;
        }
        if !(x1 < x2 && x2 <= x3 && x3 < x4) {
            return Err(Error::InvalidSpec(format!(
                "condor strikes must satisfy X1 < X2 <= X3 < X4, got {x1}, {x2}, {x3}, {x4}"
            )));
        }
        Self::new(
            DerivativeKind::Strategy {
                legs: vec![
                    StrategyLeg {
                        weight: 1.0,
                        strike: x1,
                    },
                    StrategyLeg {
                        weight: -1.0,
                        strike: x2,
                    },
                    StrategyLeg {
                        weight: -1.0,
                        strike: x3,
                    },
                    StrategyLeg {
                        weight: 1.0,
                        strike: x4,
                    },
                ],
            },
            expiry,
        )
    }

    /// The condor strikes when this spec is a four-leg (+1, -1, -1, +1)
    /// call combination.
    pub fn condor_strikes(&self) -> Option<[f64; 4]> {
        if let DerivativeKind::Strategy { legs } = &self.kind {
            if legs.len() == 4 {
                let w: Vec<f64> = legs.iter().map(|l| l.weight).collect();
                if w == [1.0, -1.0, -1.0, 1.0] {
                    return Some([
                        legs[0].strike,
                        legs[1].strike,
                        legs[2].strike,
                        legs[3].strike,
                    ]);
                }
            }
        }
        None
    }

    /// True when the payoff depends on a path statistic (average/extreme).
    pub fn is_path_dependent(&self) -> bool {
        matches!(
            self.kind,
            DerivativeKind::AsianCall { .. }
                | DerivativeKind::AsianPut { .. }
                | DerivativeKind::LookbackCall
                | DerivativeKind::LookbackPut
        )
    }
}

/// Evaluation state: bare spot, or spot plus the path statistic
/// (average, running minimum or running maximum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum State {
    Spot(f64),
    WithPath { spot: f64, path: f64 },
}

impl State {
    fn spot(&self) -> f64 {
        match self {
            State::Spot(s) | State::WithPath { spot: s, .. } => *s,
        }
    }
}

/// One analytic piece of a spot payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// `intercept + slope * S`.
    Linear { slope: f64, intercept: f64 },
    /// Shout call above the strike: `S - X + C_eu(t, S; S)`; 0 at `S = X`.
    ShoutCallTail { strike: f64 },
    /// Shout put below the strike: `X - S + P_eu(t, S; S)`.
    ShoutPutHead { strike: f64 },
    /// British call body, the predicted payoff under the contract drift.
    BritishCallBody { strike: f64, contract_drift: f64 },
    /// British put body.
    BritishPutBody { strike: f64, contract_drift: f64 },
}

impl Segment {
    fn eval(&self, params: &MarketParams, t: f64, expiry: f64, spot: f64) -> Result<f64> {
        match *self {
            Segment::Linear { slope, intercept } => Ok(intercept + slope * spot),
            Segment::ShoutCallTail { strike } => {
                if spot <= strike {
                    return Ok(0.0);
                }
                let reset = if t >= expiry {
                    0.0
                } else {
                    pricing::bs_call(params, t, spot, spot, expiry)?.price
                };
                Ok(spot - strike + reset)
            }
            Segment::ShoutPutHead { strike } => {
                if spot >= strike {
                    return Ok(0.0);
                }
                let reset = if t >= expiry {
                    0.0
                } else {
                    pricing::bs_put(params, t, spot, spot, expiry)?.price
                };
                Ok(strike - spot + reset)
            }
            Segment::BritishCallBody {
                strike,
                contract_drift,
            } => {
                if t >= expiry {
                    Ok((spot - strike).max(0.0))
                } else {
                    pricing::british_payoff(
                        params,
                        contract_drift,
                        t,
                        spot,
                        strike,
                        expiry,
                        OptionSide::Call,
                    )
                }
            }
            Segment::BritishPutBody {
                strike,
                contract_drift,
            } => {
                if t >= expiry {
                    Ok((strike - spot).max(0.0))
                } else {
                    pricing::british_payoff(
                        params,
                        contract_drift,
                        t,
                        spot,
                        strike,
                        expiry,
                        OptionSide::Put,
                    )
                }
            }
        }
    }
}

/// Breakpoint-segmented spot payoff Omega(t, S).
///
/// `segments.len() == breakpoints.len() + 1`; segment `i` applies on
/// `[breakpoints[i-1], breakpoints[i])`, so an evaluation exactly at a
/// breakpoint uses the right-hand segment (the shout segments own their
/// strike-point values to keep their half-open conventions).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePayoff {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    time_dependent: bool,
}

impl PiecewisePayoff {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>, time_dependent: bool) -> Result<Self> {
        if segments.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} segments do not fit {} breakpoints",
                segments.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::InvalidSpec("breakpoints must be positive".into()));
        }
        // Adjacent linear segments must agree at interior breakpoints.
        for (i, b) in breakpoints.iter().enumerate() {
            if let (
                Segment::Linear {
                    slope: sl,
                    intercept: il,
                },
                Segment::Linear {
                    slope: sr,
                    intercept: ir,
                },
            ) = (segments[i], segments[i + 1])
            {
                let left = il + sl * b;
                let right = ir + sr * b;
                let scale = left.abs().max(right.abs()).max(1.0);
                if (left - right).abs() > 1e-9 * scale {
                    return Err(Error::InvalidSpec(format!(
                        "payoff discontinuous at breakpoint {b}: {left} vs {right}"
                    )));
                }
            }
        }
        Ok(Self {
            breakpoints,
            segments,
            time_dependent,
        })
    }

    /// The payoff pieces of a catalogue spec. Path-dependent payoffs are
    /// two-state and have no spot-only representation.
    pub fn from_spec(spec: &DerivativeSpec) -> Result<Self> {
        match &spec.kind {
            DerivativeKind::VanillaCall { strike } => Self::new(
                vec![*strike],
                vec![
                    Segment::Linear {
                        slope: 0.0,
                        intercept: 0.0,
                    },
                    Segment::Linear {
                        slope: 1.0,
                        intercept: -strike,
                    },
                ],
                false,
            ),
            DerivativeKind::VanillaPut { strike } => Self::new(
                vec![*strike],
                vec![
                    Segment::Linear {
                        slope: -1.0,
                        intercept: *strike,
                    },
                    Segment::Linear {
                        slope: 0.0,
                        intercept: 0.0,
                    },
                ],
                false,
            ),
            DerivativeKind::Strategy { legs } => {
                let mut breakpoints: Vec<f64> = legs.iter().map(|l| l.strike).collect();
                breakpoints.dedup();
                let mut segments = Vec::with_capacity(breakpoints.len() + 1);
                segments.push(Segment::Linear {
                    slope: 0.0,
                    intercept: 0.0,
                });
                for b in &breakpoints {
                    // All legs struck at or below b are in the money past b.
                    let mut slope = 0.0;
                    let mut intercept = 0.0;
                    for leg in legs.iter().filter(|l| l.strike <= *b) {
                        slope += leg.weight;
                        intercept -= leg.weight * leg.strike;
                    }
                    segments.push(Segment::Linear { slope, intercept });
                }
                Self::new(breakpoints, segments, false)
            }
            DerivativeKind::ShoutCall { strike } => Self::new(
                vec![*strike],
                vec![
                    Segment::Linear {
                        slope: 0.0,
                        intercept: 0.0,
                    },
                    Segment::ShoutCallTail { strike: *strike },
                ],
                true,
            ),
            DerivativeKind::ShoutPut { strike } => Self::new(
                vec![*strike],
                vec![
                    Segment::ShoutPutHead { strike: *strike },
                    Segment::Linear {
                        slope: 0.0,
                        intercept: 0.0,
                    },
                ],
                true,
            ),
            DerivativeKind::BritishCall {
                strike,
                contract_drift,
            } => Self::new(
                vec![],
                vec![Segment::BritishCallBody {
                    strike: *strike,
                    contract_drift: *contract_drift,
                }],
                true,
            ),
            DerivativeKind::BritishPut {
                strike,
                contract_drift,
            } => Self::new(
                vec![],
                vec![Segment::BritishPutBody {
                    strike: *strike,
                    contract_drift: *contract_drift,
                }],
                true,
            ),
            DerivativeKind::AsianCall { .. }
            | DerivativeKind::AsianPut { .. }
            | DerivativeKind::LookbackCall
            | DerivativeKind::LookbackPut => Err(Error::Unsupported(format!(
                "{} payoff depends on a path statistic and has no spot-only pieces",
                spec.kind.name()
            ))),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn time_dependent(&self) -> bool {
        self.time_dependent
    }

    /// Index of the segment that owns `spot` (breakpoints belong to the
    /// right segment).
    fn segment_index(&self, spot: f64) -> usize {
        self.breakpoints.partition_point(|b| *b <= spot)
    }

    pub fn eval(&self, params: &MarketParams, t: f64, expiry: f64, spot: f64) -> Result<f64> {
        self.segments[self.segment_index(spot)].eval(params, t, expiry, spot)
    }
}

/// Payoff of `spec` at time `t` in the given state.
///
/// Fails for `t` outside `[0, expiry]` or non-positive state values; the
/// shout and British payoffs delegate to the European closed forms.
pub fn payoff_eval(
    spec: &DerivativeSpec,
    params: &MarketParams,
    t: f64,
    state: &State,
) -> Result<f64> {
    if !t.is_finite() || t < 0.0 || t > spec.expiry {
        return Err(Error::OutOfRange(format!(
            "payoff evaluation time {t} outside [0, {}]",
            spec.expiry
        )));
    }
    let spot = state.spot();
    if !spot.is_finite() || spot <= 0.0 {
        return Err(Error::OutOfRange(format!("spot must be > 0, got {spot}")));
    }
    let path = match state {
        State::Spot(_) => None,
        State::WithPath { path, .. } => {
            if !path.is_finite() || *path <= 0.0 {
                return Err(Error::OutOfRange(format!(
                    "path statistic must be > 0, got {path}"
                )));
            }
            Some(*path)
        }
    };

    match &spec.kind {
        DerivativeKind::AsianCall { .. } | DerivativeKind::LookbackCall => {
            let a = path.ok_or_else(|| {
                Error::OutOfRange("path-dependent payoff needs a path statistic".into())
            })?;
            Ok((spot - a).max(0.0))
        }
        DerivativeKind::AsianPut { .. } | DerivativeKind::LookbackPut => {
            let a = path.ok_or_else(|| {
                Error::OutOfRange("path-dependent payoff needs a path statistic".into())
            })?;
            Ok((a - spot).max(0.0))
        }
        _ => PiecewisePayoff::from_spec(spec)?.eval(params, t, spec.expiry, spot),
    }
}
