//! Orlicz functions: nondecreasing, left-continuous `Φ: [0, ∞) → ℝ ∪ {±∞}`
//! with `Φ ≤ 1` on `[0, 1]`, `Φ > 1` on `(1, ∞)` and `Φ > −∞` on `(0, ∞)`.
//!
//! Built-in families cover the classical examples (geometric mean, power
//! functions, quantiles, expectiles, `L^p`- and `L^{p,q}`-quantiles and
//! geometric expectiles). User-supplied functions are piecewise linear.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{OrliczError, Result};
use crate::extended::ExtendedReal;
use crate::numeric::{golden_max, log_space};

/// Answer of a convexity test that may be inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl TriState {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TriState::Yes
        } else {
            TriState::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
}

/// A knot of a piecewise-linear function. `value` is `Φ(x)` and `right` the
/// limit from the right; they differ only at jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub x: f64,
    pub value: ExtendedReal,
    pub right: ExtendedReal,
}

/// Piecewise-linear Orlicz function, linearly extrapolated past the last
/// knot unless the function has already jumped to `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    knots: Vec<Knot>,
}

impl PiecewiseLinear {
    /// Builds from `(x, Φ(x))` pairs sorted by `x`. A repeated `x` encodes a
    /// jump: the first value is `Φ(x)`, the second the right limit. The first
    /// knot must sit at `x = 0`; `−∞` is accepted only there, in which case
    /// `Φ` is constant on `(0, x₁]`. Once a value is `+∞` every later value
    /// must be `+∞`, and `Φ = +∞` on the open segment leading to it.
    pub fn new(points: &[(f64, ExtendedReal)]) -> Result<Self> {
        let bad = |msg: String| Err(OrliczError::InvalidPhi(msg));
        if points.len() < 2 {
            return bad("piecewise-linear function needs at least two points".into());
        }
        if points[0].0 != 0.0 {
            return bad(format!("first knot must be at x = 0, got {}", points[0].0));
        }
        let mut knots: Vec<Knot> = Vec::with_capacity(points.len());
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return bad(format!("knot {i}: x must be finite and nonnegative, got {x}"));
            }
            if y == ExtendedReal::NegInfinity && x != 0.0 {
                return bad(format!("knot {i}: -inf is allowed only at x = 0"));
            }
            match knots.last_mut() {
                Some(last) if last.x == x => {
                    if last.right != last.value {
                        return bad(format!("knot {i}: more than two values at x = {x}"));
                    }
                    last.right = y;
                }
                Some(last) if x < last.x => {
                    return bad(format!("knot {i}: x values must be ascending ({x} after {})", last.x));
                }
                _ => knots.push(Knot { x, value: y, right: y }),
            }
        }
        if knots.len() < 2 {
            return bad("piecewise-linear function needs at least two distinct x values".into());
        }
        let mut seen_inf = false;
        for k in &knots {
            if seen_inf && (k.value != ExtendedReal::PosInfinity || k.right != ExtendedReal::PosInfinity) {
                return bad(format!("values after +inf must stay +inf (x = {})", k.x));
            }
            if k.value == ExtendedReal::PosInfinity || k.right == ExtendedReal::PosInfinity {
                seen_inf = true;
            }
        }
        if !knots[1].value.is_finite() {
            return bad("the first knot after 0 must carry a finite value".into());
        }
        Ok(PiecewiseLinear { knots })
    }

    /// Parses the text format: one `x,Φ(x)` pair per line, ascending in `x`.
    /// Blank lines and lines starting with `#` are skipped; `inf` and `-inf`
    /// are accepted as values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(OrliczError::InvalidPhi(format!("line {}: expected `x,value`", lineno + 1)));
            };
            let x: f64 = xs
                .parse()
                .map_err(|_| OrliczError::InvalidPhi(format!("line {}: bad x `{xs}`", lineno + 1)))?;
            let y = parse_extended(ys)
                .ok_or_else(|| OrliczError::InvalidPhi(format!("line {}: bad value `{ys}`", lineno + 1)))?;
            points.push((x, y));
        }
        PiecewiseLinear::new(&points)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrliczError::InvalidPhi(format!("cannot read {}: {e}", path.display())))?;
        PiecewiseLinear::parse(&text)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    fn eval(&self, x: f64) -> ExtendedReal {
        use ExtendedReal::*;
        let ks = &self.knots;
        // index of the first knot with knot.x >= x
        let idx = ks.partition_point(|k| k.x < x);
        if idx < ks.len() && ks[idx].x == x {
            return ks[idx].value;
        }
        if idx == ks.len() {
            let last = ks[ks.len() - 1];
            let Finite(base) = last.right else {
                return PosInfinity;
            };
            let prev = ks[ks.len() - 2];
            let slope = match (prev.right, last.value) {
                (Finite(a), Finite(b)) => (b - a) / (last.x - prev.x),
                _ => 0.0,
            };
            return Finite(base + slope * (x - last.x));
        }
        let (left, right) = (ks[idx - 1], ks[idx]);
        match (left.right, right.value) {
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (NegInfinity, b) => b,
            (Finite(a), Finite(b)) => {
                let t = (x - left.x) / (right.x - left.x);
                Finite(a + t * (b - a))
            }
            (Finite(_), NegInfinity) => unreachable!("-inf only at x = 0"),
        }
    }

    fn finite_bound(&self) -> ExtendedReal {
        let ks = &self.knots;
        for (i, k) in ks.iter().enumerate() {
            if k.value == ExtendedReal::PosInfinity {
                return ExtendedReal::Finite(if i == 0 { 0.0 } else { ks[i - 1].x });
            }
            if k.right == ExtendedReal::PosInfinity {
                return ExtendedReal::Finite(k.x);
            }
        }
        ExtendedReal::PosInfinity
    }

    /// Exact conjugate: the objective `xy − Φ(x)` is linear between knots, so
    /// the supremum is reached (or approached) at a knot or a right limit, or
    /// is infinite along the extrapolated tail.
    fn conjugate(&self, y: f64) -> ExtendedReal {
        use ExtendedReal::*;
        let mut best = NegInfinity;
        for k in &self.knots {
            for v in [k.value, k.right] {
                let cand = match v {
                    Finite(phi) => Finite(k.x * y - phi),
                    NegInfinity => PosInfinity,
                    PosInfinity => NegInfinity,
                };
                best = best.max(cand);
            }
        }
        let ks = &self.knots;
        let last = ks[ks.len() - 1];
        if last.right.is_finite() {
            if let (Finite(a), Finite(b)) = (ks[ks.len() - 2].right, last.value) {
                let slope = (b - a) / (last.x - ks[ks.len() - 2].x);
                if y > slope {
                    return PosInfinity;
                }
            }
        }
        best
    }
}

/// The parametric families and the user-extensible piecewise-linear case.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `Φ(x) = 1 + log x`.
    GeometricMean,
    /// `Φ(x) = x^p`.
    Power { p: f64 },
    /// `Φ = α` on `[0, 1]`, `1 + α` beyond.
    QuantileStep { alpha: f64 },
    /// `Φ(x) = 1 + α(x−1)₊ − (1−α)(x−1)₋`.
    Expectile { alpha: f64 },
    /// `Φ(x) = 1 + α(x−1)₊^p − (1−α)(x−1)₋^p`.
    LpQuantile { alpha: f64, p: f64 },
    /// `Φ(x) = 1 + a(x−1)₊^p − b(x−1)₋^q`.
    LpqQuantile { a: f64, b: f64, p: f64, q: f64 },
    /// `Φ(x) = 1 + a(log x)₊ − b(log x)₋`.
    GeometricExpectile { a: f64, b: f64 },
    PiecewiseLinear(PiecewiseLinear),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `Φ(x) > −∞` for `x > 0`.
    FiniteBelowOnPositive,
    /// `Φ(x) ≤ 1` for `x ≤ 1`.
    AtMostOneOnUnitInterval,
    /// `Φ(x) > 1` for `x > 1`.
    AboveOneBeyondOne,
    Nondecreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub witness: f64,
    pub value: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn pass() -> Self {
        ValidationReport { passed: true, violations: Vec::new() }
    }

    pub fn describe(&self) -> String {
        if self.passed {
            return "valid".into();
        }
        self.violations
            .iter()
            .map(|v| format!("{:?} violated at x = {} (Φ = {})", v.condition, v.witness, v.value))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Grid used when validity is computed at construction.
const CONSTRUCTION_GRID: usize = 256;
/// Absolute-plus-relative slack for numeric midpoint convexity tests.
const CONVEXITY_TOL: f64 = 1e-9;

/// Search settings for numerically computed conjugates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateConfig {
    /// Upper end of the search over `x`.
    pub x_cap: f64,
    /// Lower end of the log-spaced search (x = 0 is always checked).
    pub x_min: f64,
    /// The supremum is declared `+∞` when the objective at `x_cap` beats the
    /// best value seen below it by more than this.
    pub growth_threshold: f64,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        ConjugateConfig { x_cap: 1e6, x_min: 1e-9, growth_threshold: 1.0 }
    }
}

/// An Orlicz function with its analytic flags. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrliczFunction {
    family: Family,
    convex: TriState,
    ga_convex: TriState,
    /// `u = sup { x : Φ(x) < +∞ }`.
    finite_bound: ExtendedReal,
    validity: ValidationReport,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(OrliczError::InvalidParameter(msg()))
    }
}

fn open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl OrliczFunction {
    fn analytic(family: Family, convex: bool, ga_convex: bool) -> Self {
        OrliczFunction {
            family,
            convex: TriState::from_bool(convex),
            ga_convex: TriState::from_bool(ga_convex),
            finite_bound: ExtendedReal::PosInfinity,
            validity: ValidationReport::pass(),
        }
    }

    pub fn geometric_mean() -> Self {
        Self::analytic(Family::GeometricMean, false, true)
    }

    pub fn power(p: f64) -> Result<Self> {
        check(p.is_finite() && p > 0.0, || format!("power exponent must be > 0, got {p}"))?;
        Ok(Self::analytic(Family::Power { p }, p >= 1.0, true))
    }

    pub fn quantile_step(alpha: f64) -> Result<Self> {
        check(alpha > 0.0 && alpha <= 1.0, || format!("quantile level must lie in (0, 1], got {alpha}"))?;
        Ok(Self::analytic(Family::QuantileStep { alpha }, false, false))
    }

    pub fn expectile(alpha: f64) -> Result<Self> {
        check(open_unit(alpha), || format!("expectile level must lie in (0, 1), got {alpha}"))?;
        Ok(Self::analytic(Family::Expectile { alpha }, alpha >= 0.5, alpha >= 0.5))
    }

    pub fn lp_quantile(alpha: f64, p: f64) -> Result<Self> {
        check(open_unit(alpha), || format!("L^p-quantile level must lie in (0, 1), got {alpha}"))?;
        check(p.is_finite() && p > 0.0, || format!("L^p-quantile exponent must be > 0, got {p}"))?;
        let linear = p == 1.0 && alpha >= 0.5;
        Ok(Self::analytic(Family::LpQuantile { alpha, p }, linear, linear))
    }

    pub fn lpq_quantile(a: f64, b: f64, p: f64, q: f64) -> Result<Self> {
        check(a.is_finite() && a > 0.0, || format!("upper weight a must be > 0, got {a}"))?;
        check(b.is_finite() && b >= 0.0, || format!("lower weight b must be >= 0, got {b}"))?;
        check(p.is_finite() && p >= 1.0, || format!("upper exponent p must be >= 1, got {p}"))?;
        check(q.is_finite() && q >= 1.0, || format!("lower exponent q must be >= 1, got {q}"))?;
        // with b = 0 the lower branch vanishes and Φ = 1 + a(x-1)_+^p is convex
        let convex = b == 0.0 || (p == 1.0 && q == 1.0 && a >= b);
        Ok(Self::analytic(Family::LpqQuantile { a, b, p, q }, convex, convex))
    }

    pub fn geometric_expectile(a: f64, b: f64) -> Result<Self> {
        check(a.is_finite() && a > 0.0, || format!("upper weight a must be > 0, got {a}"))?;
        check(b.is_finite() && b >= 0.0, || format!("lower weight b must be >= 0, got {b}"))?;
        Ok(Self::analytic(Family::GeometricExpectile { a, b }, false, a >= b))
    }

    /// Wraps a piecewise-linear function. Validity and convexity flags are
    /// computed numerically; an invalid function is still constructed so its
    /// report can be inspected, but solvers refuse it.
    pub fn piecewise_linear(pwl: PiecewiseLinear) -> Self {
        let finite_bound = pwl.finite_bound();
        let mut phi = OrliczFunction {
            family: Family::PiecewiseLinear(pwl),
            convex: TriState::Unknown,
            ga_convex: TriState::Unknown,
            finite_bound,
            validity: ValidationReport::pass(),
        };
        phi.validity = phi.validate(CONSTRUCTION_GRID);
        phi.convex = phi.numeric_convexity(false);
        phi.ga_convex = phi.numeric_convexity(true);
        phi
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `u = sup { x : Φ(x) < +∞ }`.
    pub fn finite_bound(&self) -> ExtendedReal {
        self.finite_bound
    }

    pub fn is_convex(&self) -> TriState {
        self.convex
    }

    pub fn is_ga_convex(&self) -> TriState {
        self.ga_convex
    }

    /// Validity as established at construction.
    pub fn validity(&self) -> &ValidationReport {
        &self.validity
    }

    pub fn is_valid(&self) -> bool {
        self.validity.passed
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(OrliczError::InvalidPhi(self.validity.describe()))
        }
    }

    /// Finite, continuous and strictly increasing: the regime where the
    /// premium solves `E[Φ(X/k)] = 1` exactly.
    pub fn is_finite_continuous_increasing(&self) -> bool {
        match &self.family {
            Family::Power { .. } | Family::Expectile { .. } | Family::LpQuantile { .. } => true,
            Family::LpqQuantile { b, .. } => *b > 0.0,
            _ => false,
        }
    }

    /// `Φ(x)` for `x ≥ 0`.
    pub fn eval(&self, x: f64) -> ExtendedReal {
        debug_assert!(x >= 0.0, "Orlicz functions live on [0, ∞)");
        use ExtendedReal::*;
        match &self.family {
            Family::GeometricMean => {
                if x == 0.0 {
                    NegInfinity
                } else {
                    Finite(1.0 + x.ln())
                }
            }
            Family::Power { p } => Finite(x.powf(*p)),
            Family::QuantileStep { alpha } => Finite(if x <= 1.0 { *alpha } else { 1.0 + alpha }),
            Family::Expectile { alpha } => Finite(if x >= 1.0 {
                1.0 + alpha * (x - 1.0)
            } else {
                1.0 - (1.0 - alpha) * (1.0 - x)
            }),
            Family::LpQuantile { alpha, p } => Finite(asymmetric_power(x, *alpha, 1.0 - alpha, *p, *p)),
            Family::LpqQuantile { a, b, p, q } => Finite(asymmetric_power(x, *a, *b, *p, *q)),
            Family::GeometricExpectile { a, b } => {
                if x == 0.0 {
                    if *b > 0.0 {
                        NegInfinity
                    } else {
                        Finite(1.0)
                    }
                } else {
                    let l = x.ln();
                    Finite(if l >= 0.0 { 1.0 + a * l } else { 1.0 + b * l })
                }
            }
            Family::PiecewiseLinear(pwl) => pwl.eval(x),
        }
    }

    /// `Φ(x) − 1`, evaluated without forming `1 + small` so that values
    /// just beyond the level set stay distinguishable from it.
    pub fn excess(&self, x: f64) -> ExtendedReal {
        use ExtendedReal::*;
        match &self.family {
            Family::GeometricMean => {
                if x == 0.0 {
                    NegInfinity
                } else {
                    Finite(x.ln())
                }
            }
            Family::Power { p } => Finite(if x == 0.0 { -1.0 } else { (p * x.ln()).exp_m1() }),
            Family::QuantileStep { alpha } => Finite(if x <= 1.0 { alpha - 1.0 } else { *alpha }),
            Family::Expectile { alpha } => Finite(if x >= 1.0 { alpha * (x - 1.0) } else { -(1.0 - alpha) * (1.0 - x) }),
            Family::LpQuantile { alpha, p } => Finite(asymmetric_excess(x, *alpha, 1.0 - alpha, *p, *p)),
            Family::LpqQuantile { a, b, p, q } => Finite(asymmetric_excess(x, *a, *b, *p, *q)),
            Family::GeometricExpectile { a, b } => {
                if x == 0.0 {
                    if *b > 0.0 {
                        NegInfinity
                    } else {
                        Finite(0.0)
                    }
                } else {
                    let l = x.ln();
                    Finite(if l >= 0.0 { a * l } else { b * l })
                }
            }
            Family::PiecewiseLinear(pwl) => match pwl.eval(x) {
                Finite(v) => Finite(v - 1.0),
                other => other,
            },
        }
    }

    /// `Φ(0+) = inf_{x>0} Φ(x)`.
    pub fn right_limit_at_zero(&self) -> ExtendedReal {
        match &self.family {
            Family::GeometricMean => ExtendedReal::NegInfinity,
            Family::GeometricExpectile { b, .. } if *b > 0.0 => ExtendedReal::NegInfinity,
            Family::PiecewiseLinear(pwl) => {
                let ks = pwl.knots();
                if ks[0].right == ExtendedReal::NegInfinity {
                    ks[1].value
                } else {
                    ks[0].right
                }
            }
            _ => self.eval(0.0),
        }
    }

    /// Checks the defining conditions on a log-spaced grid over
    /// `(0, x_max]` plus every breakpoint and the points just right of them.
    /// Analytic families pass by construction.
    pub fn validate(&self, grid_size: usize) -> ValidationReport {
        let Family::PiecewiseLinear(pwl) = &self.family else {
            return ValidationReport::pass();
        };
        let grid_size = grid_size.max(16);
        let last_x = pwl.knots().last().map_or(1.0, |k| k.x);
        let x_max = (2.0 * last_x).max(4.0);
        let mut xs = log_space(x_max * 1e-9, x_max, grid_size);
        for k in pwl.knots() {
            xs.push(k.x);
            xs.push(k.x * (1.0 + 1e-9) + 1e-12);
        }
        xs.push(1.0);
        xs.push(1.0 + 1e-9);
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let mut violations: Vec<Violation> = Vec::new();
        let mut record = |condition: Condition, witness: f64, value: ExtendedReal| {
            if !violations.iter().any(|v| v.condition == condition) {
                violations.push(Violation { condition, witness, value });
            }
        };
        let mut prev: Option<(f64, ExtendedReal)> = None;
        for &x in &xs {
            let v = self.eval(x);
            if x > 0.0 && v == ExtendedReal::NegInfinity {
                record(Condition::FiniteBelowOnPositive, x, v);
            }
            if x <= 1.0 && v > ExtendedReal::ONE {
                record(Condition::AtMostOneOnUnitInterval, x, v);
            }
            if x > 1.0 && v <= ExtendedReal::ONE {
                record(Condition::AboveOneBeyondOne, x, v);
            }
            if let Some((_, pv)) = prev {
                if v < pv {
                    record(Condition::Nondecreasing, x, v);
                }
            }
            prev = Some((x, v));
        }
        // jumps downward show up only in the knot data
        for k in pwl.knots() {
            if k.right < k.value {
                record(Condition::Nondecreasing, k.x, k.right);
            }
        }
        ValidationReport { passed: violations.is_empty(), violations }
    }

    /// Midpoint test on a log-spaced grid: of `x ↦ Φ(x)` (convexity) or of
    /// `t ↦ Φ(e^t)` (GA-convexity). Violations among finite values settle the
    /// answer as `No`; violations that involve infinite values only make it
    /// `Unknown`.
    fn numeric_convexity(&self, geometric: bool) -> TriState {
        let Family::PiecewiseLinear(pwl) = &self.family else {
            return if geometric { self.ga_convex } else { self.convex };
        };
        let last_x = pwl.knots().last().map_or(1.0, |k| k.x);
        let x_max = (2.0 * last_x).max(4.0);
        let mut xs = log_space(1e-6, x_max, 96);
        xs.extend(pwl.knots().iter().map(|k| k.x).filter(|&x| x > 0.0));
        if !geometric {
            xs.push(0.0);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut inconclusive = false;
        for (i, &x) in xs.iter().enumerate() {
            for &y in &xs[i + 1..] {
                let mid = if geometric { (x * y).sqrt() } else { 0.5 * (x + y) };
                let (fx, fy, fm) = (self.eval(x), self.eval(y), self.eval(mid));
                let avg = ExtendedReal::arithmetic_combination(fx, fy, 0.5);
                if fm <= avg {
                    continue;
                }
                match (fx, fy, fm) {
                    (ExtendedReal::Finite(a), ExtendedReal::Finite(b), ExtendedReal::Finite(m)) => {
                        let slack = CONVEXITY_TOL * (1.0 + a.abs().max(b.abs()).max(m.abs()));
                        if m > 0.5 * (a + b) + slack {
                            return TriState::No;
                        }
                    }
                    _ => inconclusive = true,
                }
            }
        }
        if inconclusive {
            TriState::Unknown
        } else {
            TriState::Yes
        }
    }

    /// Convex conjugate `Ψ(y) = sup_{x≥0} { xy − Φ(x) }` for `y ≥ 0`.
    pub fn conjugate(&self, y: f64) -> Result<ExtendedReal> {
        self.conjugate_with(y, &ConjugateConfig::default())
    }

    pub fn conjugate_with(&self, y: f64, cfg: &ConjugateConfig) -> Result<ExtendedReal> {
        if self.convex == TriState::No {
            return Err(OrliczError::NotConvex);
        }
        if !(y >= 0.0) {
            return Err(OrliczError::DomainError(format!("conjugate argument must be >= 0, got {y}")));
        }
        use ExtendedReal::*;
        let affine_tail = |upper_slope: f64, lower_value_at_zero: f64| {
            if y > upper_slope {
                PosInfinity
            } else {
                // vertices at x = 0 and x = 1
                Finite((y - 1.0).max(-lower_value_at_zero))
            }
        };
        Ok(match &self.family {
            Family::Power { p } if *p == 1.0 => {
                if y <= 1.0 {
                    Finite(0.0)
                } else {
                    PosInfinity
                }
            }
            Family::Power { p } => Finite((p - 1.0) * (y / p).powf(p / (p - 1.0))),
            Family::Expectile { alpha } | Family::LpQuantile { alpha, p: 1.0 } => affine_tail(*alpha, *alpha),
            Family::LpqQuantile { a, b, p: 1.0, q: 1.0 } => affine_tail(*a, 1.0 - b),
            Family::LpqQuantile { a, b, p, .. } if *b == 0.0 => {
                // Φ = 1 on [0, 1], then 1 + a s^p with s = x − 1
                let s = (y / (a * p)).powf(1.0 / (p - 1.0));
                Finite(y - 1.0 + (p - 1.0) * a * s.powf(*p))
            }
            Family::PiecewiseLinear(pwl) => pwl.conjugate(y),
            _ => self.conjugate_numeric(y, cfg),
        })
    }

    /// Golden-section search over `log x` on `[x_min, x_cap]`, plus `x = 0`.
    pub fn conjugate_numeric(&self, y: f64, cfg: &ConjugateConfig) -> ExtendedReal {
        let objective = |x: f64| match self.eval(x) {
            ExtendedReal::Finite(v) => x * y - v,
            ExtendedReal::PosInfinity => f64::NEG_INFINITY,
            ExtendedReal::NegInfinity => f64::INFINITY,
        };
        let at_zero = objective(0.0);
        if at_zero == f64::INFINITY {
            return ExtendedReal::PosInfinity;
        }
        let grid = log_space(cfg.x_min, 0.5 * cfg.x_cap, 97);
        let mut best = (usize::MAX, at_zero);
        for (i, &x) in grid.iter().enumerate() {
            let v = objective(x);
            if v > best.1 {
                best = (i, v);
            }
        }
        let at_cap = objective(cfg.x_cap);
        if at_cap > best.1 + cfg.growth_threshold {
            return ExtendedReal::PosInfinity;
        }
        let mut sup = best.1.max(at_cap);
        if best.0 != usize::MAX {
            let lo = grid[best.0.saturating_sub(1)].ln();
            let hi = if best.0 + 1 < grid.len() { grid[best.0 + 1] } else { cfg.x_cap }.ln();
            let (_, v) = golden_max(|t| objective(t.exp()), lo, hi, 1e-13, 300);
            sup = sup.max(v);
        }
        ExtendedReal::Finite(sup)
    }
}

/// `1 + a(x−1)₊^p − b(x−1)₋^q`.
fn asymmetric_power(x: f64, a: f64, b: f64, p: f64, q: f64) -> f64 {
    1.0 + asymmetric_excess(x, a, b, p, q)
}

fn asymmetric_excess(x: f64, a: f64, b: f64, p: f64, q: f64) -> f64 {
    if x >= 1.0 {
        a * (x - 1.0).powf(p)
    } else {
        -b * (1.0 - x).powf(q)
    }
}

fn parse_extended(s: &str) -> Option<ExtendedReal> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(ExtendedReal::PosInfinity),
        "-inf" | "-infinity" => Some(ExtendedReal::NegInfinity),
        other => other.parse::<f64>().ok().filter(|x| x.is_finite()).map(ExtendedReal::Finite),
    }
}

impl fmt::Display for OrliczFunction {
    /// Renders the function in the `--phi` grammar understood by
    /// [`parse_phi_spec`]; piecewise-linear functions are inlined.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::GeometricMean => write!(f, "geomean"),
            Family::Power { p } => write!(f, "power:{p}"),
            Family::QuantileStep { alpha } => write!(f, "quantile:{alpha}"),
            Family::Expectile { alpha } => write!(f, "expectile:{alpha}"),
            Family::LpQuantile { alpha, p } => write!(f, "lp-quantile:{alpha},{p}"),
            Family::LpqQuantile { a, b, p, q } => write!(f, "lpq:{a},{b},{p},{q}"),
            Family::GeometricExpectile { a, b } => write!(f, "geo-expectile:{a},{b}"),
            Family::PiecewiseLinear(pwl) => {
                let mut parts = Vec::new();
                for k in pwl.knots() {
                    parts.push(format!("{},{}", k.x, k.value));
                    if k.right != k.value {
                        parts.push(format!("{},{}", k.x, k.right));
                    }
                }
                write!(f, "pwl-inline:{}", parts.join(";"))
            }
        }
    }
}

/// Parses `family[:p1[,p2[,…]]]`, `pwl:<path>` or `pwl-inline:x,y;x,y;…`.
///
/// Families: `geomean`, `power:p`, `quantile:α`, `expectile:α`,
/// `lp-quantile:α,p`, `lpq:a,b,p,q`, `geo-expectile:a,b`. The result is
/// validated; invalid piecewise-linear functions are rejected with their
/// witnesses.
pub fn parse_phi_spec(spec: &str) -> Result<OrliczFunction> {
    const GRAMMAR: &str = "expected family[:p1[,p2,...]] with family one of geomean, power, quantile, \
                           expectile, lp-quantile, lpq, geo-expectile, or pwl:<path>, pwl-inline:x,y;x,y;...";
    let spec = spec.trim();
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec, None),
    };
    let parse_err = |msg: String| OrliczError::InvalidParameter(format!("{msg} ({GRAMMAR})"));
    let numbers = |expected: usize| -> Result<Vec<f64>> {
        let a = args.ok_or_else(|| parse_err(format!("`{name}` needs {expected} parameter(s)")))?;
        let vals = a
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| parse_err(format!("bad number `{}`", s.trim()))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != expected {
            return Err(parse_err(format!("`{name}` takes {expected} parameter(s), got {}", vals.len())));
        }
        Ok(vals)
    };
    let phi = match name.to_ascii_lowercase().as_str() {
        "geomean" | "geometric-mean" | "gm" => {
            if args.is_some() {
                return Err(parse_err("`geomean` takes no parameters".into()));
            }
            OrliczFunction::geometric_mean()
        }
        "power" | "lp" => OrliczFunction::power(numbers(1)?[0])?,
        "quantile" => OrliczFunction::quantile_step(numbers(1)?[0])?,
        "expectile" => OrliczFunction::expectile(numbers(1)?[0])?,
        "lp-quantile" | "lpquantile" => {
            let v = numbers(2)?;
            OrliczFunction::lp_quantile(v[0], v[1])?
        }
        "lpq" | "lpq-quantile" => {
            let v = numbers(4)?;
            OrliczFunction::lpq_quantile(v[0], v[1], v[2], v[3])?
        }
        "geo-expectile" | "geometric-expectile" => {
            let v = numbers(2)?;
            OrliczFunction::geometric_expectile(v[0], v[1])?
        }
        "pwl" => {
            let path = args.ok_or_else(|| parse_err("`pwl` needs a file path".into()))?;
            OrliczFunction::piecewise_linear(PiecewiseLinear::from_file(Path::new(path))?)
        }
        "pwl-inline" => {
            let body = args.ok_or_else(|| parse_err("`pwl-inline` needs knots".into()))?;
            OrliczFunction::piecewise_linear(PiecewiseLinear::parse(&body.replace(';', "\n"))?)
        }
        other => return Err(parse_err(format!("unknown family `{other}`"))),
    };
    phi.ensure_valid()?;
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtendedReal::*;

    fn pwl(points: &[(f64, f64)]) -> OrliczFunction {
        let pts: Vec<_> = points.iter().map(|&(x, y)| (x, ExtendedReal::from_f64(y))).collect();
        OrliczFunction::piecewise_linear(PiecewiseLinear::new(&pts).unwrap())
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(OrliczFunction::geometric_mean().eval(1.0), Finite(1.0));
        assert_eq!(OrliczFunction::geometric_mean().eval(0.0), NegInfinity);
        assert_eq!(OrliczFunction::expectile(0.5).unwrap().eval(3.0), Finite(2.0));
        assert_eq!(OrliczFunction::quantile_step(0.3).unwrap().eval(2.0), Finite(1.3));
        assert_eq!(OrliczFunction::quantile_step(0.3).unwrap().eval(1.0), Finite(0.3));
        assert_eq!(OrliczFunction::power(0.5).unwrap().eval(4.0), Finite(2.0));
    }

    #[test]
    fn expectile_half_is_the_mean_map() {
        let phi = OrliczFunction::expectile(0.5).unwrap();
        for x in [0.0, 0.25, 1.0, 7.5] {
            assert!((phi.eval(x).to_f64() - 0.5 * (1.0 + x)).abs() < 1e-15);
        }
    }

    #[test]
    fn validate_rejects_shifted_identity() {
        // Φ(x) = x − 1 stays ≤ 1 up to x = 2
        let phi = pwl(&[(0.0, -1.0), (2.0, 1.0)]);
        let report = phi.validate(64);
        assert!(!report.passed);
        let v = report
            .violations
            .iter()
            .find(|v| v.condition == Condition::AboveOneBeyondOne)
            .expect("witness for Φ(x) > 1 beyond 1");
        assert!(v.witness > 1.0 && v.witness <= 2.0, "witness {}", v.witness);
        assert!(parse_phi_spec("pwl-inline:0,-1;2,1").is_err());
    }

    #[test]
    fn validate_analytic_families_pass() {
        assert!(OrliczFunction::geometric_mean().validate(64).passed);
        assert!(OrliczFunction::lpq_quantile(1.0, 1.0, 2.0, 2.0).unwrap().validate(64).passed);
    }

    #[test]
    fn pwl_jump_is_left_continuous() {
        // quantile step at α = 0.3 as a piecewise-linear function
        let phi = pwl(&[(0.0, 0.3), (1.0, 0.3), (1.0, 1.3), (2.0, 1.3)]);
        assert!(phi.is_valid(), "{}", phi.validity().describe());
        assert_eq!(phi.eval(1.0), Finite(0.3));
        assert_eq!(phi.eval(1.0 + 1e-12), Finite(1.3));
        assert_eq!(phi.eval(5.0), Finite(1.3));
        assert_eq!(phi.is_convex(), TriState::No);
        assert_eq!(phi.is_ga_convex(), TriState::No);
    }

    #[test]
    fn pwl_infinite_tail_sets_bound() {
        let phi = pwl(&[(0.0, 0.0), (1.0, 1.0), (3.0, 2.0), (4.0, f64::INFINITY)]);
        assert!(phi.is_valid());
        assert_eq!(phi.finite_bound(), Finite(3.0));
        assert_eq!(phi.eval(3.0), Finite(2.0));
        assert_eq!(phi.eval(3.5), PosInfinity);
        assert_eq!(phi.is_convex(), TriState::No);
    }

    #[test]
    fn pwl_convex_kinked_function() {
        let phi = pwl(&[(0.0, 0.5), (1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(phi.is_convex(), TriState::Yes);
        assert_eq!(phi.is_ga_convex(), TriState::Yes);
        // Ψ(y) = max(−0.5, y − 1, 2y − 3) for y ≤ 2
        assert_eq!(phi.conjugate(0.2).unwrap(), Finite(-0.5));
        assert_eq!(phi.conjugate(1.5).unwrap(), Finite(0.5));
        assert_eq!(phi.conjugate(2.5).unwrap(), PosInfinity);
    }

    #[test]
    fn pwl_rejects_malformed_input() {
        assert!(PiecewiseLinear::parse("1,0\n2,3").is_err());
        assert!(PiecewiseLinear::parse("0,0\n2,3\n1,4").is_err());
        assert!(PiecewiseLinear::parse("0,0\n1,-inf\n2,3").is_err());
        assert!(PiecewiseLinear::parse("0,0\n1,inf\n2,3").is_err());
        assert!(PiecewiseLinear::parse("0,0\n1,1\n1,2\n1,3").is_err());
    }

    #[test]
    fn analytic_convexity_flags() {
        assert_eq!(OrliczFunction::expectile(0.8).unwrap().is_convex(), TriState::Yes);
        assert_eq!(OrliczFunction::expectile(0.3).unwrap().is_convex(), TriState::No);
        assert_eq!(OrliczFunction::geometric_mean().is_ga_convex(), TriState::Yes);
        assert_eq!(OrliczFunction::geometric_mean().is_convex(), TriState::No);
        assert_eq!(OrliczFunction::quantile_step(0.3).unwrap().is_ga_convex(), TriState::No);
        assert_eq!(OrliczFunction::lpq_quantile(1.0, 1.0, 2.0, 2.0).unwrap().is_convex(), TriState::No);
        assert_eq!(OrliczFunction::lpq_quantile(2.0, 1.0, 1.0, 1.0).unwrap().is_convex(), TriState::Yes);
        assert_eq!(OrliczFunction::geometric_expectile(2.0, 1.0).unwrap().is_ga_convex(), TriState::Yes);
        assert_eq!(OrliczFunction::geometric_expectile(1.0, 2.0).unwrap().is_ga_convex(), TriState::No);
    }

    #[test]
    fn sampled_logarithm_is_not_convex() {
        let pts: Vec<(f64, f64)> = std::iter::once((0.0, -30.0))
            .chain(log_space(1e-6, 50.0, 400).into_iter().map(|x| (x, 1.0 + x.ln())))
            .collect();
        let phi = pwl(&pts);
        assert_eq!(phi.is_convex(), TriState::No);
    }

    #[test]
    fn quantile_step_midpoint_witness() {
        // the triple straddling the jump at 1 breaks GA-convexity
        let phi = OrliczFunction::quantile_step(0.3).unwrap();
        let (x, y): (f64, f64) = (0.9, 1.2);
        let m = (x * y).sqrt();
        assert!(m > 1.0);
        assert!(phi.eval(m).to_f64() > 0.5 * (phi.eval(x).to_f64() + phi.eval(y).to_f64()));
    }

    #[test]
    fn conjugate_closed_forms() {
        let sq = OrliczFunction::power(2.0).unwrap();
        assert_eq!(sq.conjugate(2.0).unwrap(), Finite(1.0));
        assert_eq!(sq.conjugate(0.0).unwrap(), Finite(0.0));
        let lin = OrliczFunction::power(1.0).unwrap();
        assert_eq!(lin.conjugate(0.5).unwrap(), Finite(0.0));
        assert_eq!(lin.conjugate(2.0).unwrap(), PosInfinity);
        assert_eq!(OrliczFunction::geometric_mean().conjugate(1.0), Err(OrliczError::NotConvex));
    }

    #[test]
    fn conjugate_power_two_matches_fine_grid() {
        // oracle: brute-force supremum over a fine grid of x
        let sq = OrliczFunction::power(2.0).unwrap();
        for y in [0.3, 1.0, 2.0, 3.7] {
            let brute = (0..=200_000).map(|i| i as f64 * 1e-4).map(|x| x * y - x * x).fold(f64::MIN, f64::max);
            assert!((sq.conjugate(y).unwrap().to_f64() - brute).abs() < 1e-7);
        }
    }

    #[test]
    fn numeric_conjugate_agrees_with_closed_forms() {
        let cfg = ConjugateConfig::default();
        for phi in [
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::power(3.0).unwrap(),
            OrliczFunction::expectile(0.8).unwrap(),
            OrliczFunction::lpq_quantile(2.0, 1.0, 1.0, 1.0).unwrap(),
            OrliczFunction::lpq_quantile(1.5, 0.0, 2.0, 1.0).unwrap(),
        ] {
            for y in [0.0, 0.1, 0.5, 0.79, 1.0, 1.9, 3.0] {
                let exact = phi.conjugate(y).unwrap();
                let numeric = phi.conjugate_numeric(y, &cfg);
                match (exact, numeric) {
                    (Finite(a), Finite(b)) => assert!((a - b).abs() < 1e-8, "{phi} y={y}: {a} vs {b}"),
                    (a, b) => assert_eq!(a, b, "{phi} y={y}"),
                }
            }
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(parse_phi_spec("expectile:0.8").unwrap().family(), &Family::Expectile { alpha: 0.8 });
        assert_eq!(
            parse_phi_spec("lpq:1,2,2,1").unwrap().family(),
            &Family::LpqQuantile { a: 1.0, b: 2.0, p: 2.0, q: 1.0 }
        );
        assert!(matches!(parse_phi_spec("expectile:1.5"), Err(OrliczError::InvalidParameter(_))));
        assert!(parse_phi_spec("nonsense:1").is_err());
        assert!(parse_phi_spec("power:1,2").is_err());
        for s in ["geomean", "power:2.5", "quantile:0.3", "lp-quantile:0.7,2", "geo-expectile:2,1", "pwl-inline:0,0.3;1,0.3;1,1.3;2,1.3"] {
            let phi = parse_phi_spec(s).unwrap();
            assert_eq!(parse_phi_spec(&phi.to_string()).unwrap(), phi);
        }
    }
}
