//! The early exercise boundary at expiry.
//!
//! The boundary is the topological boundary of the set where the bonus
//! function is positive. [`extract_boundary`] computes it for any
//! piecewise bonus function; the `*_boundary` operations evaluate the
//! closed-form catalogue answers directly, using exact rational
//! arithmetic on the decimal values of the inputs so that formula results
//! like `(0.03/0.02) * 1 = 1.5` come out bit-exact.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::bonus::{BonusFunction, PieceExpr, StateVariable};
use crate::error::{Error, Result};
use crate::market::{AveragingSpec, MarketParams, OptionSide};

/// The boundary of the positive bonus set.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySet {
    /// Boundary spots of a spot-payoff derivative, sorted ascending.
    SpotPoints(Vec<f64>),
    /// The critical ratio of spot to path statistic.
    PathRatio(f64),
    /// The positive set is empty (or the whole domain): no boundary, no
    /// early exercise region to report.
    Empty,
}

impl BoundarySet {
    pub fn is_empty(&self) -> bool {
        matches!(self, BoundarySet::Empty)
    }

    /// Points as a slice; path ratios expose their single value.
    pub fn values(&self) -> Vec<f64> {
        match self {
            BoundarySet::SpotPoints(p) => p.clone(),
            BoundarySet::PathRatio(r) => vec![*r],
            BoundarySet::Empty => vec![],
        }
    }
}

impl std::fmt::Display for BoundarySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundarySet::SpotPoints(points) => {
                write!(f, "S* = {{")?;
                for (i, p) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "}}")
            }
            BoundarySet::PathRatio(ratio) => write!(f, "S/A = {ratio}"),
            BoundarySet::Empty => write!(f, "no exercise region"),
        }
    }
}

// ---------------------------------------------------------------------------
// Exact decimal rationals
// ---------------------------------------------------------------------------

/// The exact rational value of the shortest decimal representation of
/// `x`. Round-trips through the same f64, so `0.03` means 3/100.
fn decimal_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (mantissa, exponent) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (text.as_str(), 0),
    };
    let (sign, digits_text) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa),
    };
    let (int_part, frac_part) = match digits_text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits_text, ""),
    };
    let digits: String = [int_part, frac_part].concat();
    let numer: BigInt = digits.parse().ok()?;
    let scale = frac_part.len() as i64 - exponent;
    let ten = BigInt::from(10);
    let rational = if scale >= 0 {
        BigRational::new(numer, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(numer * ten.pow((-scale) as u32))
    };
    Some(rational * BigRational::from_integer(BigInt::from(sign)))
}

fn rational_to_f64(value: &BigRational) -> f64 {
    value
        .to_f64()
        .unwrap_or_else(|| value.numer().to_f64().unwrap_or(f64::NAN) / value.denom().to_f64().unwrap_or(f64::NAN))
}

/// Extended rational: `None` plays the role of +infinity in the
/// `max[., .]`/`min[., .]` saturation when `q = 0`.
type ExtRational = Option<BigRational>;

fn ext_max(a: &BigRational, b: ExtRational) -> ExtRational {
    b.map(|b| if *a >= b { a.clone() } else { b })
}

fn ext_min_finite(cap: &BigRational, value: ExtRational) -> BigRational {
    match value {
        None => cap.clone(),
        Some(v) => {
            if v <= *cap {
                v
            } else {
                cap.clone()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Transcendental roots
// ---------------------------------------------------------------------------

/// Default residual tolerance for transcendental roots; comfortably
/// below the six significant digits the comparison tables need.
pub const DEFAULT_ROOT_TOL: f64 = 1e-13;

/// A one-variable root problem on a sign-changing bracket.
pub struct RootProblem<'a> {
    pub residual: &'a dyn Fn(f64) -> f64,
    /// Analytic derivative when available; the solver falls back to pure
    /// bisection steps without it.
    pub derivative: Option<&'a dyn Fn(f64) -> f64>,
    pub bracket: (f64, f64),
    pub tol: f64,
}

/// Bracketed bisection refined by safeguarded Newton steps.
///
/// Requires `residual(lo)` and `residual(hi)` to differ in sign; returns
/// a root with `|residual| <= tol * scale`, where the scale is taken from
/// the initial bracket residuals.
pub fn solve_transcendental(problem: &RootProblem) -> Result<f64> {
    let f = problem.residual;
    let (mut a, mut b) = problem.bracket;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Solver {
            message: format!("invalid bracket [{a}, {b}]"),
            residual_lo: f64::NAN,
            residual_hi: f64::NAN,
        });
    }
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Solver {
            message: format!("no sign change over [{a}, {b}]"),
            residual_lo: fa,
            residual_hi: fb,
        });
    }
    let scale = 1.0_f64.max(fa.abs()).max(fb.abs());
    let tol = if problem.tol > 0.0 {
        problem.tol
    } else {
        DEFAULT_ROOT_TOL
    };

    let mut x = 0.5 * (a + b);
    let mut fx = f(x);
    for _ in 0..200 {
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // Absolute residual target first; steep residuals fall through
        // to the bracket-width exit at machine resolution.
        if fx.abs() <= tol {
            return Ok(x);
        }
        if (b - a).abs() <= 2.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        // Newton step, kept strictly inside the bracket.
        let mut next = None;
        if let Some(df) = problem.derivative {
            let slope = df(x);
            if slope.is_finite() && slope != 0.0 {
                let candidate = x - fx / slope;
                if candidate.is_finite() && candidate > a && candidate < b {
                    next = Some(candidate);
                }
            }
        }
        x = next.unwrap_or(0.5 * (a + b));
        fx = f(x);
    }
    if fx.abs() <= tol * scale {
        Ok(x)
    } else {
        Err(Error::Solver {
            message: format!("no convergence after 200 iterations, at x = {x}"),
            residual_lo: fa,
            residual_hi: fb,
        })
    }
}

/// Expands a bracket geometrically (x2 out from the seed, 60 doublings
/// each way) until the residual changes sign.
pub fn expanding_bracket(f: &dyn Fn(f64) -> f64, seed: f64) -> Result<(f64, f64)> {
    let f0 = f(seed);
    if f0 == 0.0 {
        return Ok((seed, seed));
    }
    let mut lo = seed;
    let mut hi = seed;
    let mut flo = f0;
    let mut fhi = f0;
    for _ in 0..60 {
        hi *= 2.0;
        let fh = f(hi);
        if fh == 0.0 || fh.signum() != f0.signum() {
            return Ok((seed, hi));
        }
        fhi = fh;
        lo *= 0.5;
        let fl = f(lo);
        if fl == 0.0 || fl.signum() != f0.signum() {
            return Ok((lo, seed));
        }
        flo = fl;
    }
    Err(Error::Solver {
        message: format!("no sign change within [{lo}, {hi}] around seed {seed}"),
        residual_lo: flo,
        residual_hi: fhi,
    })
}

// ---------------------------------------------------------------------------
// Generic extraction
// ---------------------------------------------------------------------------

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign structure of one piece on its open interval: the signs adjacent
/// to each end plus any interior sign-change roots.
struct PieceSigns {
    sign_lo: i8,
    sign_hi: i8,
    roots: Vec<f64>,
}

fn end_value(piece: &PieceExpr, at: f64) -> f64 {
    if at == 0.0 {
        piece.limit_zero_plus()
    } else if at == f64::INFINITY {
        piece.limit_pos_infinity()
    } else {
        piece.eval(at)
    }
}

/// Root of a strictly monotone piece inside (u, v), where the end values
/// have strictly opposite signs.
fn monotone_root(piece: &PieceExpr, u: f64, v: f64, fu: f64) -> Result<f64> {
    if let PieceExpr::Affine { a, b } = *piece {
        return Ok(-a / b);
    }
    // Shrink infinite ends to a finite sign-preserving bracket.
    let f = |x: f64| piece.eval(x);
    let mut lo = u;
    if lo == 0.0 {
        lo = if v.is_finite() { v } else { 1.0 };
        let mut found = false;
        for _ in 0..80 {
            lo *= 0.5;
            if sign_of(f(lo)) == sign_of(fu) {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Analysis(
                "could not isolate the root near the lower end".into(),
            ));
        }
    }
    let mut hi = v;
    if hi == f64::INFINITY {
        hi = if u > 0.0 { u } else { 1.0 };
        let fv_sign = -sign_of(fu);
        let mut found = false;
        for _ in 0..80 {
            hi *= 2.0;
            if sign_of(f(hi)) == fv_sign {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Analysis(
                "could not isolate the root toward infinity".into(),
            ));
        }
    }
    let derivative = |x: f64| piece.derivative(x);
    solve_transcendental(&RootProblem {
        residual: &f,
        derivative: Some(&derivative),
        bracket: (lo, hi),
        tol: DEFAULT_ROOT_TOL,
    })
}

fn piece_signs(piece: &PieceExpr, lo: f64, hi: f64) -> Result<PieceSigns> {
    if matches!(piece, PieceExpr::PosInfinity) {
        return Ok(PieceSigns {
            sign_lo: 1,
            sign_hi: 1,
            roots: vec![],
        });
    }
    if piece.is_identically_zero() {
        return Ok(PieceSigns {
            sign_lo: 0,
            sign_hi: 0,
            roots: vec![],
        });
    }
    // Split at the stationary point (if any) so each span is monotone.
    let mut cuts = vec![lo];
    if let Some(c) = piece.critical_point() {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);

    let mut roots = Vec::new();
    let mut span_signs = Vec::new();
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let fu = end_value(piece, u);
        let fv = end_value(piece, v);
        let (su, sv) = (sign_of(fu), sign_of(fv));
        if su != 0 && sv != 0 && su != sv {
            roots.push(monotone_root(piece, u, v, fu)?);
        }
        // A zero end value on a monotone span means the sign just inside
        // follows the other end.
        let near_u = if su != 0 { su } else { sv };
        let near_v = if sv != 0 { sv } else { su };
        span_signs.push((near_u, near_v));
    }
    Ok(PieceSigns {
        sign_lo: span_signs.first().map(|s| s.0).unwrap_or(0),
        sign_hi: span_signs.last().map(|s| s.1).unwrap_or(0),
        roots,
    })
}

/// The boundary of `{f_b > 0}` within the open domain.
///
/// Interior sign-change roots are boundary points; a breakpoint is one
/// when its neighborhood (the kink value and the adjacent piece signs)
/// contains both positive and non-positive values. An empty or
/// whole-domain positive set yields [`BoundarySet::Empty`].
pub fn extract_boundary(f: &BonusFunction) -> Result<BoundarySet> {
    let breakpoints = f.breakpoints();
    let pieces = f.pieces();
    let mut per_piece = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        let lo = if i == 0 { 0.0 } else { breakpoints[i - 1] };
        let hi = if i == breakpoints.len() {
            f64::INFINITY
        } else {
            breakpoints[i]
        };
        per_piece.push(piece_signs(piece, lo, hi)?);
    }

    let mut points: Vec<f64> = Vec::new();
    for signs in &per_piece {
        points.extend_from_slice(&signs.roots);
    }
    for (i, b) in breakpoints.iter().enumerate() {
        let left = per_piece[i].sign_hi;
        let right = per_piece[i + 1].sign_lo;
        let own = sign_of(f.kink_values()[i]);
        let has_positive = left == 1 || right == 1 || own == 1;
        let has_nonpositive = left <= 0 || right <= 0 || own <= 0;
        if has_positive && has_nonpositive {
            points.push(*b);
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite boundary points"));
    points.dedup();

    match f.variable() {
        StateVariable::Spot => {
            if points.is_empty() {
                Ok(BoundarySet::Empty)
            } else {
                Ok(BoundarySet::SpotPoints(points))
            }
        }
        StateVariable::PathRatio => match points.len() {
            0 => Ok(BoundarySet::Empty),
            1 => Ok(BoundarySet::PathRatio(points[0])),
            n => Err(Error::Analysis(format!(
                "path-ratio bonus produced {n} boundary ratios; expected at most one"
            ))),
        },
    }
}

// ---------------------------------------------------------------------------
// Closed-form catalogue
// ---------------------------------------------------------------------------

fn check_strike(strike: f64) -> Result<BigRational> {
    if !strike.is_finite() || strike <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "strike must be > 0, got {strike}"
        )));
    }
    decimal_rational(strike).ok_or_else(|| Error::InvalidSpec("non-finite strike".into()))
}

/// `max[X, (r/q) X]` for the call, `min[X, (r/q) X]` for the put.
///
/// A call on a non-dividend underlying has an empty positive set (the
/// bonus is `-rX < 0` above the strike), likewise a put at `r = 0`; both
/// report no exercise region rather than a point at infinity.
pub fn vanilla_boundary(
    params: &MarketParams,
    side: OptionSide,
    strike: f64,
) -> Result<BoundarySet> {
    let x = check_strike(strike)?;
    let r = decimal_rational(params.rate).expect("validated rate");
    let q = decimal_rational(params.dividend_yield).expect("validated yield");
    match side {
        OptionSide::Call => {
            if q.is_zero() {
                return Ok(BoundarySet::Empty);
            }
            let scaled = ext_max(&x, Some(&r / &q * &x)).expect("finite");
            Ok(BoundarySet::SpotPoints(vec![rational_to_f64(&scaled)]))
        }
        OptionSide::Put => {
            if r.is_zero() {
                return Ok(BoundarySet::Empty);
            }
            let ratio: ExtRational = if q.is_zero() {
                None
            } else {
                Some(&r / &q * &x)
            };
            let point = ext_min_finite(&x, ratio);
            Ok(BoundarySet::SpotPoints(vec![rational_to_f64(&point)]))
        }
    }
}

/// The condor case split:
///
/// 1. `X2+X3-X1-X4 > 0` and `r(X3+X2-X1) >= q X4`: one point.
/// 2. `X2+X3-X1-X4 > 0` and `r(X3+X2-X1) <  q X4`: three points.
/// 3. `X2+X3-X1-X4 <= 0`: two points.
///
/// With `q = 0` the `r/q` terms saturate at their `min[., .]` caps; the
/// formulas stay valid by that limit convention.
pub fn condor_boundary(params: &MarketParams, strikes: [f64; 4]) -> Result<BoundarySet> {
    let [x1f, x2f, x3f, x4f] = strikes;
    if !(x1f < x2f && x2f <= x3f && x3f < x4f) {
        return Err(Error::InvalidSpec(format!(
            "condor strikes must satisfy X1 < X2 <= X3 < X4, got {x1f}, {x2f}, {x3f}, {x4f}"
        )));
    }
    let x1 = check_strike(x1f)?;
    let x2 = check_strike(x2f)?;
    let x3 = check_strike(x3f)?;
    let x4 = check_strike(x4f)?;
    let r = decimal_rational(params.rate).expect("validated rate");
    let q = decimal_rational(params.dividend_yield).expect("validated yield");

    if r.is_zero() && q.is_zero() {
        // The bonus vanishes identically; nothing is ever worth exercising.
        return Ok(BoundarySet::Empty);
    }

    let carry = |scale: &BigRational| -> ExtRational {
        if q.is_zero() {
            None
        } else {
            Some(&r / &q * scale)
        }
    };

    let inner_sum = &x3 + &x2 - &x1;
    let net = &inner_sum - &x4; // X2 + X3 - X1 - X4
    let lower = ext_min_finite(&x2, ext_max(&x1, carry(&x1)));

    let points: Vec<BigRational> = if net.is_positive() {
        if &r * &inner_sum >= &q * &x4 {
            vec![lower]
        } else {
            // q > 0 here, so the middle point cannot saturate.
            let middle = ext_max(&x3, carry(&inner_sum)).expect("q > 0 in case 2");
            vec![lower, middle, x4]
        }
    } else {
        let upper = ext_min_finite(&x4, ext_max(&x3, carry(&inner_sum)));
        vec![lower, upper]
    };

    debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
    Ok(BoundarySet::SpotPoints(
        points.iter().map(rational_to_f64).collect(),
    ))
}

/// Boundary ratio `S/A` for averaged underlyings (and `S/m`, `S/M` for
/// the running extremes): `max[1, root]` for calls, `min[1, root]` for
/// puts, with the root taken from the family's boundary equation.
pub fn asian_ratio_boundary(
    params: &MarketParams,
    avg: &AveragingSpec,
    side: OptionSide,
    expiry: f64,
) -> Result<BoundarySet> {
    if !expiry.is_finite() || expiry <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "expiry must be > 0, got {expiry}"
        )));
    }
    let (r, q) = (params.rate, params.dividend_yield);

    // Running extremes: the drift vanishes and the vanilla-style ratio
    // r/q applies, with the same degenerate conventions.
    if avg.is_extreme() {
        let rr = decimal_rational(r).expect("validated rate");
        let qq = decimal_rational(q).expect("validated yield");
        let one = BigRational::one();
        return match side {
            OptionSide::Call => {
                if qq.is_zero() {
                    Ok(BoundarySet::Empty)
                } else {
                    let point = ext_max(&one, Some(&rr / &qq)).expect("finite");
                    Ok(BoundarySet::PathRatio(rational_to_f64(&point)))
                }
            }
            OptionSide::Put => {
                if rr.is_zero() {
                    Ok(BoundarySet::Empty)
                } else {
                    let ratio: ExtRational = if qq.is_zero() { None } else { Some(&rr / &qq) };
                    Ok(BoundarySet::PathRatio(rational_to_f64(&ext_min_finite(
                        &one, ratio,
                    ))))
                }
            }
        };
    }

    // Arithmetic family with no exponential weight has the rational
    // closed form (r + 1/T) / (q + 1/T).
    let root = if avg.power == 1.0 && avg.lambda == 0.0 {
        let rr = decimal_rational(r).expect("validated rate");
        let qq = decimal_rational(q).expect("validated yield");
        let inv_t = decimal_rational(expiry)
            .map(|t| BigRational::one() / t)
            .ok_or_else(|| Error::InvalidSpec("non-finite expiry".into()))?;
        rational_to_f64(&((&rr + &inv_t) / (&qq + &inv_t)))
    } else {
        // weight = lambda/(1 - e^(-lambda T)), or 1/T unweighted.
        let weight = if avg.lambda > 0.0 {
            avg.lambda / (-(-avg.lambda * expiry).exp_m1())
        } else {
            1.0 / expiry
        };
        let power = avg.power;
        let residual = move |y: f64| {
            let family = if power == 0.0 {
                y.ln()
            } else {
                (power * y.ln()).exp_m1() / power
            };
            r - q * y - weight * family
        };
        let derivative = move |y: f64| -q - weight * y.powf(power - 1.0);
        let bracket = expanding_bracket(&residual, 1.0)?;
        solve_transcendental(&RootProblem {
            residual: &residual,
            derivative: Some(&derivative),
            bracket,
            tol: DEFAULT_ROOT_TOL,
        })?
    };

    Ok(BoundarySet::PathRatio(match side {
        OptionSide::Call => root.max(1.0),
        OptionSide::Put => root.min(1.0),
    }))
}

/// The shouting boundary sits at the strike for both sides, independent
/// of the carry parameters: the bonus jumps from zero straight to
/// infinity there.
pub fn shout_boundary(
    _params: &MarketParams,
    strike: f64,
    _side: OptionSide,
) -> Result<BoundarySet> {
    check_strike(strike)?;
    Ok(BoundarySet::SpotPoints(vec![strike]))
}

/// `max[X, r/(q + mu_c) X]` for the call, `min[X, r/(q + mu_c) X]` for
/// the put. Requires `q + mu_c > 0`; otherwise the formula degenerates
/// and the sign structure is reported in the error.
pub fn british_boundary(
    params: &MarketParams,
    contract_drift: f64,
    strike: f64,
    side: OptionSide,
) -> Result<BoundarySet> {
    let x = check_strike(strike)?;
    let r = decimal_rational(params.rate).expect("validated rate");
    let q = decimal_rational(params.dividend_yield).expect("validated yield");
    let mu = decimal_rational(contract_drift)
        .ok_or_else(|| Error::InvalidSpec("contract drift must be finite".into()))?;
    let effective = &q + &mu;
    if !effective.is_positive() {
        let structure = match side {
            OptionSide::Call => "the call bonus is negative beyond the strike (empty positive set)",
            OptionSide::Put => "the put bonus stays positive below the strike (boundary at X)",
        };
        return Err(Error::DegenerateDrift(format!(
            "q + mu_c = {} <= 0; closed form needs q + mu_c > 0; {structure}",
            rational_to_f64(&effective)
        )));
    }
    let scaled = &r / &effective * &x;
    let point = match side {
        OptionSide::Call => ext_max(&x, Some(scaled)).expect("finite"),
        OptionSide::Put => ext_min_finite(&x, Some(scaled)),
    };
    Ok(BoundarySet::SpotPoints(vec![rational_to_f64(&point)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bonus::bonus_symbolic;
    use crate::market::DerivativeSpec;

    fn params(r: f64, q: f64) -> MarketParams {
        MarketParams::new(r, q, 0.30).unwrap()
    }

    #[test]
    fn decimal_rationals_are_exact() {
        let r = decimal_rational(0.03).unwrap();
        let q = decimal_rational(0.02).unwrap();
        let ratio = &r / &q;
        assert_eq!(rational_to_f64(&ratio), 1.5);
        assert_eq!(
            decimal_rational(1e-8).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(100_000_000u64))
        );
        assert_eq!(
            decimal_rational(-2.5).unwrap(),
            BigRational::new(BigInt::from(-5), BigInt::from(2))
        );
        assert!(decimal_rational(f64::INFINITY).is_none());
    }

    #[test]
    fn vanilla_boundaries() {
        // Call: max[X, (r/q) X]; exact 1.5 for the canonical parameters.
        let b = vanilla_boundary(&params(0.03, 0.02), OptionSide::Call, 1.0).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![1.5]));
        // Put: min[1, 2/3].
        let b = vanilla_boundary(&params(0.02, 0.03), OptionSide::Put, 1.0).unwrap();
        let v = b.values();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-16);
        // r = q pins both at the strike.
        let pc = vanilla_boundary(&params(0.02, 0.02), OptionSide::Call, 1.0).unwrap();
        let pp = vanilla_boundary(&params(0.02, 0.02), OptionSide::Put, 1.0).unwrap();
        assert_eq!(pc, BoundarySet::SpotPoints(vec![1.0]));
        assert_eq!(pp, BoundarySet::SpotPoints(vec![1.0]));
        // No dividends: the call never exercises early.
        let none = vanilla_boundary(&params(0.03, 0.0), OptionSide::Call, 1.0).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn condor_table_rows_are_exact() {
        let row1 = condor_boundary(&params(0.03, 0.02), [1.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(row1, BoundarySet::SpotPoints(vec![1.5]));
        let row2 = condor_boundary(&params(0.02, 0.03), [1.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(row2, BoundarySet::SpotPoints(vec![1.0, 4.0, 5.0]));
        let row3 = condor_boundary(&params(0.03, 0.02), [1.0, 2.0, 3.0, 4.5]).unwrap();
        assert_eq!(row3, BoundarySet::SpotPoints(vec![1.5, 4.5]));
    }

    #[test]
    fn condor_rejects_bad_ordering() {
        assert!(condor_boundary(&params(0.03, 0.02), [3.0, 2.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn condor_zero_dividend_saturates() {
        // r/q -> infinity collapses max[X1, .] onto the X2 cap.
        let b = condor_boundary(&params(0.03, 0.0), [1.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![3.0]));
        let b = condor_boundary(&params(0.03, 0.0), [1.0, 2.0, 3.0, 4.5]).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![2.0, 4.5]));
        // Zero carry on both sides: identically zero bonus, empty set.
        let b = condor_boundary(&params(0.0, 0.0), [1.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(b.is_empty());
    }

    #[test]
    fn extraction_matches_vanilla_catalogue() {
        let p = params(0.03, 0.02);
        let spec = DerivativeSpec::vanilla_call(1.0, 1.0).unwrap();
        let f = bonus_symbolic(&spec, &p).unwrap();
        let got = extract_boundary(&f).unwrap();
        assert_eq!(got.values(), vec![1.5]);

        // Identically zero bonus: empty boundary.
        let zero = BonusFunction::new(
            StateVariable::Spot,
            vec![],
            vec![PieceExpr::Affine { a: 0.0, b: 0.0 }],
        )
        .unwrap();
        assert!(extract_boundary(&zero).unwrap().is_empty());
    }

    #[test]
    fn extraction_splits_non_monotone_pieces() {
        // f(x) = -2 + x - 2 ln x dips through zero twice around its
        // stationary point at x = 2.
        let piece = PieceExpr::BoxCox {
            a: -2.0,
            b: 1.0,
            c: -2.0,
            p: 0.0,
        };
        let f = BonusFunction::new(StateVariable::Spot, vec![], vec![piece]).unwrap();
        let points = extract_boundary(&f).unwrap().values();
        assert_eq!(points.len(), 2, "expected two roots, got {points:?}");
        for x in &points {
            let residual = -2.0 + x - 2.0 * x.ln();
            assert!(residual.abs() < 1e-10, "residual {residual} at {x}");
        }
        assert!(points[0] < 2.0 && points[1] > 2.0);

        // The same shape is rejected as a path-ratio boundary: a single
        // critical ratio cannot carry two crossings.
        let g = BonusFunction::new(StateVariable::PathRatio, vec![], vec![piece]).unwrap();
        assert!(matches!(extract_boundary(&g), Err(Error::Analysis(_))));
    }

    #[test]
    fn extraction_handles_condor_cases() {
        for (r, q, strikes, want) in [
            (0.03, 0.02, [1.0, 3.0, 4.0, 5.0], vec![1.5]),
            (0.02, 0.03, [1.0, 3.0, 4.0, 5.0], vec![1.0, 4.0, 5.0]),
            (0.03, 0.02, [1.0, 2.0, 3.0, 4.5], vec![1.5, 4.5]),
        ] {
            let p = params(r, q);
            let spec = DerivativeSpec::condor(strikes, 1.0).unwrap();
            let f = bonus_symbolic(&spec, &p).unwrap();
            let got = extract_boundary(&f).unwrap().values();
            assert_eq!(got.len(), want.len(), "r={r}, q={q}");
            for (g, w) in got.iter().zip(&want) {
                assert!(
                    (g - w).abs() <= 1e-12 * w.max(1.0),
                    "r={r}, q={q}: got {g}, want {w}"
                );
            }
        }
    }

    #[test]
    fn asian_boundaries() {
        let p = params(0.03, 0.02);
        // Arithmetic closed form (r + 1/T)/(q + 1/T) = 103/102.
        let b = asian_ratio_boundary(&p, &AveragingSpec::arithmetic(), OptionSide::Call, 1.0)
            .unwrap();
        match b {
            BoundarySet::PathRatio(v) => assert_eq!(v, 103.0 / 102.0),
            other => panic!("expected a ratio, got {other:?}"),
        }

        // Geometric golden root from a 200-iteration bisection oracle.
        let b = asian_ratio_boundary(&p, &AveragingSpec::geometric(), OptionSide::Call, 1.0)
            .unwrap();
        let root = match b {
            BoundarySet::PathRatio(v) => v,
            other => panic!("expected a ratio, got {other:?}"),
        };
        let golden = {
            let f = |g: f64| 0.03 - 0.02 * g - g.ln();
            let (mut lo, mut hi) = (1.0, 2.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        assert!((root - golden).abs() < 1e-13, "root {root} vs golden {golden}");
        assert!((root - 1.009_851_182_908_257_6).abs() < 1e-12);
        let residual = 0.03 - 0.02 * root - root.ln();
        assert!(residual.abs() < 1e-12);

        // r = q: call and put ratios collapse onto one together.
        for side in [OptionSide::Call, OptionSide::Put] {
            let b = asian_ratio_boundary(
                &params(0.02, 0.02),
                &AveragingSpec::geometric(),
                side,
                1.0,
            )
            .unwrap();
            match b {
                BoundarySet::PathRatio(v) => assert!((v - 1.0).abs() < 1e-13),
                other => panic!("expected a ratio, got {other:?}"),
            }
        }

        // Lookback extremes use r/q.
        let b = asian_ratio_boundary(&p, &AveragingSpec::running_min(), OptionSide::Call, 1.0)
            .unwrap();
        match b {
            BoundarySet::PathRatio(v) => assert_eq!(v, 1.5),
            other => panic!("expected a ratio, got {other:?}"),
        }
        let b = asian_ratio_boundary(&p, &AveragingSpec::running_max(), OptionSide::Put, 1.0)
            .unwrap();
        match b {
            BoundarySet::PathRatio(v) => assert_eq!(v, 1.0),
            other => panic!("expected a ratio, got {other:?}"),
        }
    }

    #[test]
    fn weighted_root_limits() {
        let p = params(0.03, 0.02);
        // lambda -> 0 at p = 1 recovers the arithmetic ratio.
        let weighted = AveragingSpec::new(1.0, 1e-10).unwrap();
        let got = asian_ratio_boundary(&p, &weighted, OptionSide::Call, 1.0).unwrap();
        let arith = 103.0 / 102.0;
        match got {
            BoundarySet::PathRatio(v) => {
                assert!((v - arith).abs() < 1e-8, "weighted {v} vs arithmetic {arith}")
            }
            other => panic!("expected a ratio, got {other:?}"),
        }

        // p -> 0 recovers the geometric root.
        let near_geometric = AveragingSpec::new(1e-9, 0.0).unwrap();
        let got = asian_ratio_boundary(&p, &near_geometric, OptionSide::Call, 1.0).unwrap();
        let geo = asian_ratio_boundary(&p, &AveragingSpec::geometric(), OptionSide::Call, 1.0)
            .unwrap();
        match (got, geo) {
            (BoundarySet::PathRatio(a), BoundarySet::PathRatio(b)) => {
                assert!((a - b).abs() < 1e-6, "p->0 root {a} vs geometric {b}")
            }
            other => panic!("expected ratios, got {other:?}"),
        }
    }

    #[test]
    fn weighted_root_without_sign_change_reports_residuals() {
        // Negative power, no dividends, carry larger than the weight
        // cap: the residual stays positive on all of (0, inf).
        let p = MarketParams::new(2.0, 0.0, 0.3).unwrap();
        let avg = AveragingSpec::new(-1.0, 1.0).unwrap();
        match asian_ratio_boundary(&p, &avg, OptionSide::Call, 1.0) {
            Err(Error::Solver {
                residual_lo,
                residual_hi,
                ..
            }) => {
                assert!(residual_lo > 0.0 && residual_hi > 0.0);
            }
            other => panic!("expected a bracket failure, got {other:?}"),
        }
    }

    #[test]
    fn shout_boundary_is_the_strike() {
        let b = shout_boundary(&params(0.03, 0.02), 1.0, OptionSide::Call).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![1.0]));
        let b = shout_boundary(&params(0.01, 0.09), 2.5, OptionSide::Put).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![2.5]));
        let b2 = shout_boundary(&params(0.09, 0.01), 2.5, OptionSide::Put).unwrap();
        assert_eq!(b, b2);
    }

    #[test]
    fn british_boundaries() {
        // mu_c = 0 reduces to the vanilla formula.
        let b = british_boundary(&params(0.03, 0.02), 0.0, 1.0, OptionSide::Call).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![1.5]));
        let b = british_boundary(&params(0.03, 0.01), 0.01, 1.0, OptionSide::Call).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![1.5]));
        let b = british_boundary(&params(0.02, 0.02), 0.02, 1.0, OptionSide::Put).unwrap();
        assert_eq!(b, BoundarySet::SpotPoints(vec![0.5]));
        assert!(matches!(
            british_boundary(&params(0.02, 0.01), -0.02, 1.0, OptionSide::Call),
            Err(Error::DegenerateDrift(_))
        ));
    }

    #[test]
    fn solver_requires_sign_change_and_meets_tolerance() {
        let f = |x: f64| x * x - 2.0;
        let df = |x: f64| 2.0 * x;
        let root = solve_transcendental(&RootProblem {
            residual: &f,
            derivative: Some(&df),
            bracket: (0.0, 2.0),
            tol: 1e-13,
        })
        .unwrap();
        assert!((root - 2.0f64.sqrt()).abs() < 1e-14);
        // Without a derivative, bisection still lands the root.
        let root = solve_transcendental(&RootProblem {
            residual: &f,
            derivative: None,
            bracket: (0.0, 2.0),
            tol: 1e-13,
        })
        .unwrap();
        assert!((root - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            solve_transcendental(&RootProblem {
                residual: &f,
                derivative: None,
                bracket: (3.0, 4.0),
                tol: 1e-13,
            }),
            Err(Error::Solver { .. })
        ));
    }

    #[test]
    fn expanding_bracket_finds_decreasing_residuals() {
        // Monotone decreasing residual of the geometric family.
        let f = |g: f64| 0.05 - 0.001 * g - 2.0 * g.ln();
        let (lo, hi) = expanding_bracket(&f, 1.0).unwrap();
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
    }
}
