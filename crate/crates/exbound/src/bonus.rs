//! The exercise bonus function at expiry.
//!
//! The bonus of being exercised is `f_b = -N f_d`, where `N = e^(rt)` is
//! the numeraire and `f_d` applies the pricing generator to the
//! numeraire-deflated payoff. At points where the payoff kinks, the value
//! is the arithmetic mean of the one-sided limits.
//!
//! Two constructions are provided: [`bonus_symbolic`] evaluates the
//! generator piece by piece and yields an exact piecewise expression;
//! [`bonus_numeric_oracle`] estimates the same quantity as the limit of
//! `d/dt (V_eu - Omega)` by Richardson-extrapolated central differences,
//! for specs with a closed-form European value.

use crate::error::{Error, Result};
use crate::market::{
    AveragingSpec, DerivativeKind, DerivativeSpec, MarketParams, OptionSide, PiecewisePayoff,
    Segment,
};
use crate::pricing;

/// Which state variable a bonus function is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateVariable {
    /// Plain spot `S`.
    Spot,
    /// The ratio of spot to the path statistic, `S/A`, `S/m` or `S/M`;
    /// values are per unit of the path statistic.
    PathRatio,
}

/// `(x^p - 1) / p`, continued through `p = 0` as `ln x`.
fn box_cox(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        x.ln()
    } else {
        (p * x.ln()).exp_m1() / p
    }
}

/// One analytic piece of a bonus function on an open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceExpr {
    /// `a + b x`.
    Affine { a: f64, b: f64 },
    /// `a + b x + c (x^p - 1)/p`; the `p = 0` member reads `a + b x + c ln x`.
    BoxCox { a: f64, b: f64, c: f64, p: f64 },
    /// Positive infinity throughout (the in-the-money shout bonus).
    PosInfinity,
}

impl PieceExpr {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PieceExpr::Affine { a, b } => a + b * x,
            PieceExpr::BoxCox { a, b, c, p } => a + b * x + c * box_cox(x, p),
            PieceExpr::PosInfinity => f64::INFINITY,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            PieceExpr::Affine { b, .. } => b,
            PieceExpr::BoxCox { b, c, p, .. } => b + c * x.powf(p - 1.0),
            PieceExpr::PosInfinity => 0.0,
        }
    }

    /// Limit as x -> 0+, as an extended real.
    pub fn limit_zero_plus(&self) -> f64 {
        match *self {
            PieceExpr::Affine { a, .. } => a,
            PieceExpr::BoxCox { a, c, p, .. } => {
                if c == 0.0 {
                    a
                } else if p > 0.0 {
                    a - c / p
                } else {
                    // ln x and x^p/p (p < 0) both diverge to -infinity.
                    if c > 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                }
            }
            PieceExpr::PosInfinity => f64::INFINITY,
        }
    }

    /// Limit as x -> +infinity, as an extended real.
    pub fn limit_pos_infinity(&self) -> f64 {
        fn signed_infinity(coeff: f64) -> Option<f64> {
            if coeff > 0.0 {
                Some(f64::INFINITY)
            } else if coeff < 0.0 {
                Some(f64::NEG_INFINITY)
            } else {
                None
            }
        }
        match *self {
            PieceExpr::Affine { a, b } => signed_infinity(b).unwrap_or(a),
            PieceExpr::BoxCox { a, b, c, p } => {
                if c == 0.0 || p < 0.0 {
                    // The Box-Cox term converges to -c/p for p < 0.
                    let tail = if c == 0.0 { 0.0 } else { -c / p };
                    signed_infinity(b).unwrap_or(a + tail)
                } else if p > 1.0 {
                    signed_infinity(c).expect("c != 0 here")
                } else if p == 1.0 {
                    signed_infinity(b + c).unwrap_or(a - c)
                } else {
                    // 0 <= p < 1: the linear term dominates when present.
                    signed_infinity(b)
                        .or_else(|| signed_infinity(c))
                        .expect("b or c nonzero here")
                }
            }
            PieceExpr::PosInfinity => f64::INFINITY,
        }
    }

    /// The unique stationary point on (0, inf), if the piece has one.
    pub fn critical_point(&self) -> Option<f64> {
        match *self {
            PieceExpr::Affine { .. } | PieceExpr::PosInfinity => None,
            PieceExpr::BoxCox { b, c, p, .. } => {
                if p == 1.0 || b == 0.0 || c == 0.0 || b.signum() == c.signum() {
                    return None;
                }
                // b + c x^(p-1) = 0  =>  x = (-b/c)^(1/(p-1)).
                let x = (-b / c).powf(1.0 / (p - 1.0));
                x.is_finite().then_some(x)
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(self, PieceExpr::Affine { a: 0.0, b: 0.0 })
            || matches!(
                self,
                PieceExpr::BoxCox {
                    a: 0.0,
                    b: 0.0,
                    c: 0.0,
                    ..
                }
            )
    }
}

/// Piecewise representation of the bonus function at expiry.
///
/// `pieces[i]` applies on the open interval between consecutive
/// breakpoints (with 0 and infinity at the ends); the value exactly at a
/// breakpoint is the stored kink value, the mean of the one-sided limits.
#[derive(Debug, Clone, PartialEq)]
pub struct BonusFunction {
    variable: StateVariable,
    breakpoints: Vec<f64>,
    pieces: Vec<PieceExpr>,
    kink_values: Vec<f64>,
}

impl BonusFunction {
    pub fn new(
        variable: StateVariable,
        breakpoints: Vec<f64>,
        pieces: Vec<PieceExpr>,
    ) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::Analysis(format!(
                "{} pieces do not fit {} breakpoints",
                pieces.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Analysis(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::Analysis("breakpoints must be positive".into()));
        }
        let kink_values = breakpoints
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let left = pieces[i].eval(*b);
                let right = pieces[i + 1].eval(*b);
                let kink = 0.5 * (left + right);
                if kink.is_nan() {
                    Err(Error::Analysis(format!(
                        "one-sided limits at {b} do not average to an extended real"
                    )))
                } else {
                    Ok(kink)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            variable,
            breakpoints,
            pieces,
            kink_values,
        })
    }

    pub fn variable(&self) -> StateVariable {
        self.variable
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[PieceExpr] {
        &self.pieces
    }

    pub fn kink_values(&self) -> &[f64] {
        &self.kink_values
    }

    /// Value at `x`, using the averaged kink value exactly at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        if let Ok(i) = self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).expect("finite breakpoints"))
        {
            return self.kink_values[i];
        }
        let idx = self.breakpoints.partition_point(|b| *b < x);
        self.pieces[idx].eval(x)
    }
}

/// Drift of the path-statistic process `dA = mu_A dt` for the general
/// exponentially weighted average; extremes have zero drift.
///
/// The `p -> 0` and `lambda -> 0` members are the analytic limits, not
/// numerical ones.
pub fn average_drift(avg: &AveragingSpec, t: f64, spot: f64, path: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::SingularTime(format!(
            "average drift is singular at t = {t}"
        )));
    }
    if !spot.is_finite() || spot <= 0.0 || !path.is_finite() || path <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "average drift needs positive state, got S = {spot}, A = {path}"
        )));
    }
    if avg.is_extreme() {
        return Ok(0.0);
    }
    // lambda/(1 - e^(-lambda t)), with the lambda -> 0 limit 1/t.
    let weight = if avg.lambda > 0.0 {
        avg.lambda / (-(-avg.lambda * t).exp_m1())
    } else {
        1.0 / t
    };
    Ok(path * weight * box_cox(spot / path, avg.power))
}

/// Bonus contribution of one affine payoff piece `alpha + beta S`.
///
/// The generator term `-(sigma^2/2) S^2 Omega''` vanishes identically on
/// affine pieces, leaving `r Omega - (r - q) S Omega' = r alpha + q beta S`.
fn affine_piece_bonus(params: &MarketParams, slope: f64, intercept: f64) -> PieceExpr {
    PieceExpr::Affine {
        a: params.rate * intercept,
        b: params.dividend_yield * slope,
    }
}

/// The in-the-money piece of the averaged (ratio) bonus for the given
/// family, per unit of the path statistic: `-r + q y + w g_p(y)` with
/// `w = lambda/(1 - e^(-lambda T))` (or `1/T` unweighted).
fn ratio_piece(params: &MarketParams, avg: &AveragingSpec, expiry: f64) -> PieceExpr {
    let (r, q) = (params.rate, params.dividend_yield);
    if avg.is_extreme() {
        return PieceExpr::Affine { a: -r, b: q };
    }
    let weight = if avg.lambda > 0.0 {
        avg.lambda / (-(-avg.lambda * expiry).exp_m1())
    } else {
        1.0 / expiry
    };
    if avg.power == 1.0 {
        // Arithmetic-family collapse: (q + w) y - (r + w).
        PieceExpr::Affine {
            a: -(r + weight),
            b: q + weight,
        }
    } else {
        PieceExpr::BoxCox {
            a: -r,
            b: q,
            c: weight,
            p: avg.power,
        }
    }
}

fn negated(piece: PieceExpr) -> PieceExpr {
    match piece {
        PieceExpr::Affine { a, b } => PieceExpr::Affine { a: -a, b: -b },
        PieceExpr::BoxCox { a, b, c, p } => PieceExpr::BoxCox {
            a: -a,
            b: -b,
            c: -c,
            p,
        },
        PieceExpr::PosInfinity => unreachable!("catalogue pieces are never negated infinities"),
    }
}

const ZERO: PieceExpr = PieceExpr::Affine { a: 0.0, b: 0.0 };

/// The bonus function of `spec` at expiry, built piece by piece from the
/// pricing generator.
pub fn bonus_symbolic(spec: &DerivativeSpec, params: &MarketParams) -> Result<BonusFunction> {
    let (r, q) = (params.rate, params.dividend_yield);
    match &spec.kind {
        DerivativeKind::VanillaCall { .. }
        | DerivativeKind::VanillaPut { .. }
        | DerivativeKind::Strategy { .. } => {
            let payoff = PiecewisePayoff::from_spec(spec)?;
            let pieces = payoff
                .segments()
                .iter()
                .map(|seg| match *seg {
                    Segment::Linear { slope, intercept } => {
                        Ok(affine_piece_bonus(params, slope, intercept))
                    }
                    _ => Err(Error::Unsupported(
                        "generator route applies to piecewise-linear payoffs".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            BonusFunction::new(StateVariable::Spot, payoff.breakpoints().to_vec(), pieces)
        }
        DerivativeKind::ShoutCall { strike } => BonusFunction::new(
            StateVariable::Spot,
            vec![*strike],
            vec![ZERO, PieceExpr::PosInfinity],
        ),
        DerivativeKind::ShoutPut { strike } => BonusFunction::new(
            StateVariable::Spot,
            vec![*strike],
            vec![PieceExpr::PosInfinity, ZERO],
        ),
        DerivativeKind::BritishCall {
            strike,
            contract_drift,
        } => BonusFunction::new(
            StateVariable::Spot,
            vec![*strike],
            vec![
                ZERO,
                PieceExpr::Affine {
                    a: -r * strike,
                    b: q + contract_drift,
                },
            ],
        ),
        DerivativeKind::BritishPut {
            strike,
            contract_drift,
        } => BonusFunction::new(
            StateVariable::Spot,
            vec![*strike],
            vec![
                PieceExpr::Affine {
                    a: r * strike,
                    b: -(q + contract_drift),
                },
                ZERO,
            ],
        ),
        DerivativeKind::AsianCall { averaging } => BonusFunction::new(
            StateVariable::PathRatio,
            vec![1.0],
            vec![ZERO, ratio_piece(params, averaging, spec.expiry)],
        ),
        DerivativeKind::AsianPut { averaging } => BonusFunction::new(
            StateVariable::PathRatio,
            vec![1.0],
            vec![negated(ratio_piece(params, averaging, spec.expiry)), ZERO],
        ),
        DerivativeKind::LookbackCall => BonusFunction::new(
            StateVariable::PathRatio,
            vec![1.0],
            vec![ZERO, PieceExpr::Affine { a: -r, b: q }],
        ),
        DerivativeKind::LookbackPut => BonusFunction::new(
            StateVariable::PathRatio,
            vec![1.0],
            vec![PieceExpr::Affine { a: r, b: -q }, ZERO],
        ),
    }
}

/// Default time-offset ladder for the difference-quotient estimate.
pub const DEFAULT_DT_LADDER: [f64; 3] = [1e-4, 5e-5, 2.5e-5];

/// Half-width multiplier of the kink exclusion band, in units of
/// `sigma sqrt(delta_max)` of log-distance.
pub const KINK_BAND_SIGMAS: f64 = 5.0;

/// Difference-quotient estimate of the bonus at expiry,
/// `d/dt (V_eu - Omega)` as `t -> T`, Richardson-extrapolated over the
/// offset ladder.
///
/// Available for specs with closed-form European values (vanilla,
/// strategies, British). Near payoff kinks the one-sided limits differ
/// and the estimate is refused: the difference quotient develops a
/// `sqrt(T - t)` boundary layer there.
pub fn bonus_numeric_oracle(
    spec: &DerivativeSpec,
    params: &MarketParams,
    spot: f64,
    dt_ladder: &[f64],
) -> Result<f64> {
    if !spot.is_finite() || spot <= 0.0 {
        return Err(Error::OutOfRange(format!("spot must be > 0, got {spot}")));
    }
    let expiry = spec.expiry;

    let mut ladder: Vec<f64> = dt_ladder.to_vec();
    ladder.retain(|d| d.is_finite() && *d > 0.0);
    ladder.sort_by(|a, b| b.partial_cmp(a).expect("finite offsets"));
    ladder.dedup();
    if ladder.is_empty() {
        return Err(Error::OutOfRange("dt ladder must be nonempty".into()));
    }
    let delta_max = ladder[0];
    if 1.5 * delta_max >= expiry {
        return Err(Error::OutOfRange(format!(
            "dt ladder reaches {delta_max} but expiry is only {expiry}"
        )));
    }

    // Kinks of the terminal payoff, where the limit is one-sided.
    let kinks: Vec<f64> = match &spec.kind {
        DerivativeKind::BritishCall { strike, .. } | DerivativeKind::BritishPut { strike, .. } => {
            vec![*strike]
        }
        _ => PiecewisePayoff::from_spec(spec)?.breakpoints().to_vec(),
    };
    let band = KINK_BAND_SIGMAS * params.sigma * delta_max.sqrt();
    for k in &kinks {
        if (spot / k).ln().abs() < band {
            return Err(Error::KinkExclusion {
                state: spot,
                breakpoint: *k,
                band,
            });
        }
    }

    // V_eu(t, spot) - Omega(t, spot) for the supported catalogue.
    let difference = |t: f64| -> Result<f64> {
        match &spec.kind {
            DerivativeKind::VanillaCall { strike } => {
                Ok(pricing::bs_call(params, t, spot, *strike, expiry)?.price
                    - (spot - strike).max(0.0))
            }
            DerivativeKind::VanillaPut { strike } => {
                Ok(pricing::bs_put(params, t, spot, *strike, expiry)?.price
                    - (strike - spot).max(0.0))
            }
            DerivativeKind::Strategy { legs } => {
                let value = pricing::strategy_price(params, t, spot, legs, expiry)?;
                let intrinsic: f64 = legs
                    .iter()
                    .map(|l| l.weight * (spot - l.strike).max(0.0))
                    .sum();
                Ok(value - intrinsic)
            }
            DerivativeKind::BritishCall {
                strike,
                contract_drift,
            } => Ok(pricing::bs_call(params, t, spot, *strike, expiry)?.price
                - pricing::british_payoff(
                    params,
                    *contract_drift,
                    t,
                    spot,
                    *strike,
                    expiry,
                    OptionSide::Call,
                )?),
            DerivativeKind::BritishPut {
                strike,
                contract_drift,
            } => Ok(pricing::bs_put(params, t, spot, *strike, expiry)?.price
                - pricing::british_payoff(
                    params,
                    *contract_drift,
                    t,
                    spot,
                    *strike,
                    expiry,
                    OptionSide::Put,
                )?),
            _ => Err(Error::Unsupported(format!(
                "no closed-form European value for {}",
                spec.kind.name()
            ))),
        }
    };

    // Central differences centered at T - delta with half-step delta/2.
    let mut quotients = Vec::with_capacity(ladder.len());
    for delta in &ladder {
        let hi = difference(expiry - 0.5 * delta)?;
        let lo = difference(expiry - 1.5 * delta)?;
        quotients.push((hi - lo) / delta);
    }
    if quotients.len() == 1 {
        return Ok(quotients[0]);
    }
    // One Richardson step against the leading O(delta) error.
    let mut extrapolated = quotients[0];
    for i in 0..quotients.len() - 1 {
        let (d0, d1) = (ladder[i], ladder[i + 1]);
        extrapolated = (d0 * quotients[i + 1] - d1 * quotients[i]) / (d0 - d1);
    }
    Ok(extrapolated)
}
