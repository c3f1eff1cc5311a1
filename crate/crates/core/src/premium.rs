//! The Orlicz premium `H_Φ(X) = inf { k > 0 : E[Φ(X/k)] ≤ 1 }`.
//!
//! `g(k) = E[Φ(X/k)]` is nonincreasing and right-continuous in `k` but may
//! jump, so the generic route is plain bisection on a bracket
//! `[ess sup X / u, ess sup X]`. Each named family also has a closed-form
//! route used as an independent check.

use serde::Serialize;

use crate::error::{OrliczError, Result};
use crate::extended::ExtendedReal;
use crate::numeric::bisect_decreasing;
use crate::orlicz::{Family, OrliczFunction};
use crate::prob::RandomVariable;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Below this the downward bracket expansion gives up and reports zero.
const BRACKET_FLOOR: f64 = 1e-300;
const MAX_ITERATIONS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `X ≡ 0`, or an atom at zero with `Φ(0) = −∞`.
    Degenerate,
    GeometricMean,
    PowerNorm,
    LeftQuantile,
    Expectile,
    LpQuantile,
    LpqQuantile,
    GeometricExpectile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Generic,
    ClosedForm(ClosedForm),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PremiumResult {
    pub value: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub route: Route,
    /// `g(value)`; at most one whenever `value > 0`.
    pub g_at_value: ExtendedReal,
}

impl PremiumResult {
    fn closed(value: f64, form: ClosedForm, g: ExtendedReal) -> Self {
        PremiumResult { value, bracket: (value, value), iterations: 0, route: Route::ClosedForm(form), g_at_value: g }
    }
}

/// `g(k) = E[Φ(X/k)]` for `k > 0`.
pub fn expected_loss(phi: &OrliczFunction, x: &RandomVariable, k: f64) -> ExtendedReal {
    x.expect(|v| phi.eval(v / k))
}

/// `g(k) − 1 = E[Φ(X/k) − 1]`, computed without cancellation near one.
pub fn expected_excess(phi: &OrliczFunction, x: &RandomVariable, k: f64) -> ExtendedReal {
    x.expect(|v| phi.excess(v / k))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= f64::EPSILON) || !tol.is_finite() {
        return Err(OrliczError::ToleranceTooSmall(tol));
    }
    Ok(())
}

fn degenerate(phi: &OrliczFunction, x: &RandomVariable) -> bool {
    x.is_zero() || (x.prob_zero() > 0.0 && phi.eval(0.0) == ExtendedReal::NegInfinity)
}

/// Generic bisection premium.
///
/// The bracket shrinks until its width is at most `tol · value`, or until it
/// cannot be split in floating point. The returned value is the upper end,
/// so `g(value) ≤ 1` always holds.
pub fn orlicz_premium(phi: &OrliczFunction, x: &RandomVariable, tol: f64) -> Result<PremiumResult> {
    phi.ensure_valid()?;
    check_tol(tol)?;
    if degenerate(phi, x) {
        return Ok(PremiumResult::closed(0.0, ClosedForm::Degenerate, ExtendedReal::NegInfinity));
    }
    let accepted = |k: f64| expected_excess(phi, x, k) <= ExtendedReal::ZERO;
    let sup = x.ess_sup();
    let mut hi = sup;
    debug_assert!(accepted(hi), "X/ess sup ≤ 1 must be acceptable");
    let mut iterations = 0;
    let mut lo = match phi.finite_bound() {
        ExtendedReal::Finite(u) => sup / u,
        _ => tol * sup,
    };
    if accepted(lo) {
        if phi.finite_bound().is_finite() {
            // below sup/u the top atom makes g infinite
            return Ok(PremiumResult {
                value: lo,
                bracket: (lo, lo),
                iterations,
                route: Route::Generic,
                g_at_value: expected_loss(phi, x, lo),
            });
        }
        loop {
            hi = lo;
            lo *= 1e-3;
            iterations += 1;
            if lo < BRACKET_FLOOR {
                return Ok(PremiumResult {
                    value: 0.0,
                    bracket: (0.0, hi),
                    iterations,
                    route: Route::Generic,
                    g_at_value: expected_loss(phi, x, hi),
                });
            }
            if !accepted(lo) {
                break;
            }
        }
    }
    while iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi || mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if accepted(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PremiumResult { value: hi, bracket: (lo, hi), iterations, route: Route::Generic, g_at_value: expected_loss(phi, x, hi) })
}

/// Closed-form premium where the family has one; `None` otherwise (and for
/// a geometric expectile of a variable with a zero atom and `b = 0`).
pub fn closed_form_premium(phi: &OrliczFunction, x: &RandomVariable, tol: f64) -> Result<Option<PremiumResult>> {
    phi.ensure_valid()?;
    check_tol(tol)?;
    if degenerate(phi, x) {
        return Ok(Some(PremiumResult::closed(0.0, ClosedForm::Degenerate, ExtendedReal::NegInfinity)));
    }
    let (value, form) = match phi.family() {
        Family::GeometricMean => (x.mean_by(|v| v.ln()).exp(), ClosedForm::GeometricMean),
        Family::Power { p } => (x.mean_by(|v| v.powf(*p)).powf(1.0 / p), ClosedForm::PowerNorm),
        Family::QuantileStep { alpha } => (left_quantile_premium(x, *alpha)?, ClosedForm::LeftQuantile),
        Family::Expectile { alpha } => (expectile(x, *alpha, tol)?, ClosedForm::Expectile),
        Family::LpQuantile { alpha, p } => (lp_quantile(x, *alpha, *p, tol)?, ClosedForm::LpQuantile),
        Family::LpqQuantile { a, b, p, q } => (lpq_quantile(x, *a, *b, *p, *q, tol)?, ClosedForm::LpqQuantile),
        Family::GeometricExpectile { a, b } => {
            if x.prob_zero() > 0.0 {
                return Ok(None);
            }
            (geometric_expectile(x, *a, *b, tol)?, ClosedForm::GeometricExpectile)
        }
        Family::PiecewiseLinear(_) => return Ok(None),
    };
    let g = if value > 0.0 { expected_loss(phi, x, value) } else { ExtendedReal::NegInfinity };
    Ok(Some(PremiumResult::closed(value, form, g)))
}

/// Closed form when available, generic bisection otherwise.
pub fn premium(phi: &OrliczFunction, x: &RandomVariable, tol: f64) -> Result<PremiumResult> {
    match closed_form_premium(phi, x, tol)? {
        Some(r) => Ok(r),
        None => orlicz_premium(phi, x, tol),
    }
}

impl RandomVariable {
    pub(crate) fn mean_by<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values().iter().zip(self.probs()).map(|(&v, p)| p * f(v)).sum()
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OrliczError::InvalidParameter(format!("level must lie in (0, 1), got {alpha}")))
    }
}

/// Root of `α E[(X−k)₊^p] − (1−α) E[(X−k)₋^p]` on `[min, max]` for signed
/// values; `p = 1` gives the expectile.
pub(crate) fn asymmetric_root(values: &[f64], probs: &[f64], alpha: f64, p: f64, tol: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return lo;
    }
    let h = |k: f64| {
        values
            .iter()
            .zip(probs)
            .map(|(&v, &w)| {
                let d = v - k;
                if d > 0.0 {
                    w * alpha * d.powf(p)
                } else {
                    -w * (1.0 - alpha) * (-d).powf(p)
                }
            })
            .sum::<f64>()
    };
    let scale = lo.abs().max(hi.abs());
    bisect_decreasing(h, lo, hi, tol * scale)
}

/// The `α`-expectile: root of `α E[(X−k)₊] = (1−α) E[(X−k)₋]`.
pub fn expectile(x: &RandomVariable, alpha: f64, tol: f64) -> Result<f64> {
    check_level(alpha)?;
    check_tol(tol)?;
    Ok(asymmetric_root(x.values(), x.probs(), alpha, 1.0, tol))
}

/// The `L^{p+1}`-quantile: root of `α E[(X−k)₊^p] = (1−α) E[(X−k)₋^p]`.
pub fn lp_quantile(x: &RandomVariable, alpha: f64, p: f64, tol: f64) -> Result<f64> {
    check_level(alpha)?;
    check_tol(tol)?;
    if !(p > 0.0) {
        return Err(OrliczError::InvalidParameter(format!("exponent must be > 0, got {p}")));
    }
    Ok(asymmetric_root(x.values(), x.probs(), alpha, p, tol))
}

/// The `L^{p,q}`-quantile: the premium solves
/// `a E[((X−k)/k)₊^p] = b E[((X−k)/k)₋^q]`. With `p = q` the scale `k`
/// factors out and the root is found on `[min X, max X]`; otherwise the
/// equation is solved in `log k`.
pub fn lpq_quantile(x: &RandomVariable, a: f64, b: f64, p: f64, q: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(a > 0.0 && b >= 0.0 && p >= 1.0 && q >= 1.0) {
        return Err(OrliczError::InvalidParameter(format!("need a > 0, b >= 0, p >= 1, q >= 1; got {a}, {b}, {p}, {q}")));
    }
    if x.is_zero() {
        return Ok(0.0);
    }
    if b == 0.0 {
        return Ok(x.ess_sup());
    }
    if p == q {
        return Ok(asymmetric_root(x.values(), x.probs(), a / (a + b), p, tol));
    }
    let sup = x.ess_sup();
    let h = |t: f64| {
        let k = t.exp();
        x.values()
            .iter()
            .zip(x.probs())
            .map(|(&v, &w)| {
                let d = v / k - 1.0;
                if d > 0.0 {
                    w * a * d.powf(p)
                } else {
                    -w * b * (-d).powf(q)
                }
            })
            .sum::<f64>()
    };
    let t = bisect_decreasing(h, (sup * 1e-15).ln(), sup.ln(), tol);
    Ok(t.exp().min(sup))
}

/// Left `α`-quantile `inf { k > 0 : P(X ≤ k) ≥ α }`.
pub fn left_quantile_premium(x: &RandomVariable, alpha: f64) -> Result<f64> {
    x.distribution().quantile(alpha)
}

/// `exp(e_α(log X))` with `α = a/(a+b)`; `b = 0` gives the essential
/// supremum.
pub fn geometric_expectile(x: &RandomVariable, a: f64, b: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(a > 0.0 && b >= 0.0) {
        return Err(OrliczError::InvalidParameter(format!("need a > 0 and b >= 0, got {a}, {b}")));
    }
    if x.values().iter().any(|&v| v == 0.0) {
        return Err(OrliczError::DomainError("geometric expectile needs strictly positive outcomes".into()));
    }
    if b == 0.0 {
        return Ok(x.ess_sup());
    }
    let logs: Vec<f64> = x.values().iter().map(|v| v.ln()).collect();
    Ok(asymmetric_root(&logs, x.probs(), a / (a + b), 1.0, tol).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CashBehaviour {
    Additive,
    Subadditive,
    Superadditive,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftComparison {
    pub shift: f64,
    pub shifted_premium: f64,
    pub premium_plus_shift: f64,
    /// `H(X+m) − H(X) − m`.
    pub difference: f64,
}

/// The cash-additive family `Φ(x) = 1 + a(x−1)₊^p − b(x−1)₋^p`, which an
/// Orlicz function must belong to if its premium is cash-additive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymmetricPowerFamily {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    /// `p = 1`: the premium is an expectile with `α = a/(a+b)`.
    pub expectile: bool,
    /// Convex exactly when `p = 1` and `a ≥ b`.
    pub convex: bool,
}

pub fn asymmetric_power_family(phi: &OrliczFunction) -> Option<AsymmetricPowerFamily> {
    let (a, b, p) = match phi.family() {
        Family::Expectile { alpha } => (*alpha, 1.0 - alpha, 1.0),
        Family::LpQuantile { alpha, p } => (*alpha, 1.0 - alpha, *p),
        Family::LpqQuantile { a, b, p, q } if p == q && *b > 0.0 => (*a, *b, *p),
        Family::Power { p } if *p == 1.0 => (1.0, 1.0, 1.0),
        _ => return None,
    };
    Some(AsymmetricPowerFamily { a, b, p, expectile: p == 1.0, convex: p == 1.0 && a >= b })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CashAdditivityReport {
    pub classification: CashBehaviour,
    pub base_premium: f64,
    pub comparisons: Vec<ShiftComparison>,
    /// Membership of `Φ` in the cash-additive family, if any.
    pub family: Option<AsymmetricPowerFamily>,
    /// Whether the classification agrees with the family membership:
    /// additive exactly for members.
    pub consistent_with_family: bool,
}

/// Compares `H(X+m)` with `H(X)+m` for each shift and classifies the
/// differences with tolerance `tol · max(1, H(X)+m)`.
pub fn cash_additivity_probe(phi: &OrliczFunction, x: &RandomVariable, shifts: &[f64], tol: f64) -> Result<CashAdditivityReport> {
    check_tol(tol)?;
    if shifts.is_empty() || shifts.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(OrliczError::InvalidParameter("shifts must be positive and finite".into()));
    }
    let solver_tol = DEFAULT_TOL.min(tol);
    let base = orlicz_premium(phi, x, solver_tol)?.value;
    let mut comparisons = Vec::with_capacity(shifts.len());
    let (mut below, mut above) = (false, false);
    for &m in shifts {
        let shifted = orlicz_premium(phi, &x.shift(m)?, solver_tol)?.value;
        let target = base + m;
        let difference = shifted - target;
        let slack = tol * target.max(1.0);
        below |= difference < -slack;
        above |= difference > slack;
        comparisons.push(ShiftComparison { shift: m, shifted_premium: shifted, premium_plus_shift: target, difference });
    }
    let classification = match (below, above) {
        (false, false) => CashBehaviour::Additive,
        (true, false) => CashBehaviour::Subadditive,
        (false, true) => CashBehaviour::Superadditive,
        (true, true) => CashBehaviour::Neither,
    };
    let family = asymmetric_power_family(phi);
    let consistent_with_family = family.is_some() == (classification == CashBehaviour::Additive) || x.is_constant();
    Ok(CashAdditivityReport { classification, base_premium: base, comparisons, family, consistent_with_family })
}
