//! Penalty functions and dual certificates.
//!
//! For a convex `Φ` the premium is `sup_Q β(Q) E_Q[X]`; for a GA-convex `Φ`
//! it is `sup_Q α(Q) exp(E_Q[log X])` on strictly positive `X`. Each
//! `(Q, penalty)` pair therefore gives a lower bound on the premium, and a
//! search over a simplex grid of measures recovers it up to a reported gap.
//!
//! `β = 0` and `α = 0` encode an infinitely penalized measure.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OrliczError, Result};
use crate::extended::ExtendedReal;
use crate::hg::hg_risk_measure;
use crate::numeric::{golden_max, golden_min, log_space};
use crate::orlicz::{Family, OrliczFunction, TriState};
use crate::premium::{orlicz_premium, DEFAULT_TOL};
use crate::prob::{FiniteProbabilitySpace, MeasureChange, RandomVariable};

/// Multipliers are searched on `[MULTIPLIER_LO, MULTIPLIER_HI]`.
const MULTIPLIER_LO: f64 = 1e-6;
const MULTIPLIER_HI: f64 = 1e6;
const MULTIPLIER_GRID: usize = 121;
/// Inner searches treat growth past these as unbounded.
const X_CAP: f64 = 1e15;
const LOG_CAP: f64 = 700.0;
const LOCAL_STARTS: usize = 32;
const MAX_RECENTRES: usize = 100;
const LOCAL_ITERATIONS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualKind {
    /// `β(Q) E_Q[X]`.
    Arithmetic,
    /// `α(Q) exp(E_Q[log X])`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Exhaustive grid for `n ≤ 4`, seeded local search beyond.
    Auto,
    /// Exhaustive grid; `DimensionTooLarge` for `n > 4`.
    Exhaustive,
    /// Multi-start projected gradient ascent.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub measure: MeasureChange,
    pub penalty: f64,
    pub lower_bound: f64,
    pub kind: DualKind,
}

/// Default grid step: 0.01 up to three outcomes, 0.05 for four.
pub fn default_grid_step(n: usize) -> f64 {
    if n <= 3 {
        0.01
    } else {
        0.05
    }
}

fn require_convex(phi: &OrliczFunction) -> Result<()> {
    phi.ensure_valid()?;
    if phi.is_convex() == TriState::No {
        return Err(OrliczError::NotConvex);
    }
    Ok(())
}

fn require_ga_convex(phi: &OrliczFunction) -> Result<()> {
    phi.ensure_valid()?;
    if phi.is_ga_convex() == TriState::No {
        return Err(OrliczError::NotGAConvex);
    }
    Ok(())
}

/// Minimizes a convex function of `t > 0` whose effective domain is an
/// interval: log-spaced scan, then golden-section search in `log t` on the
/// best cell, first pulling infinite cell ends in to the domain boundary.
/// Returns `+∞` when the scan finds no finite value.
fn minimize_convex_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let grid = log_space(lo, hi, MULTIPLIER_GRID);
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let Some(i) = (0..grid.len()).filter(|&i| values[i].is_finite()).min_by(|&a, &b| values[a].total_cmp(&values[b])) else {
        return f64::INFINITY;
    };
    let finite = |s: f64| f(s.exp()).is_finite();
    let centre = grid[i].ln();
    let mut a = grid[i.saturating_sub(1)].ln();
    let mut b = grid[(i + 1).min(grid.len() - 1)].ln();
    if !finite(a) {
        a = finite_edge(&finite, a, centre);
    }
    if !finite(b) {
        b = finite_edge(&finite, b, centre);
    }
    let (_, v) = golden_min(|s| f(s.exp()), a, b, 1e-13, 400);
    v.min(values[i])
}

/// Bisects between an infeasible point and a feasible one and returns the
/// feasible end of the final bracket.
fn finite_edge<F: Fn(f64) -> bool>(finite: &F, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if finite(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// `sup_{x ≥ 0} (y x − λ Φ(x))` by bracket doubling and golden-section
/// search; `+∞` when the objective keeps growing past `X_CAP`.
fn inner_sup_linear(phi: &OrliczFunction, y: f64, lambda: f64) -> f64 {
    let g = |x: f64| y * x - lambda * phi.eval(x).to_f64();
    let mut h = 1.0;
    while g(2.0 * h) > g(h) {
        h *= 2.0;
        if h > X_CAP {
            return f64::INFINITY;
        }
    }
    let (_, v) = golden_max(g, 0.0, 2.0 * h, 1e-13 * h, 400);
    v.max(g(0.0))
}

/// `sup_{y ∈ ℝ} (w y − λ Φ(e^y))`; `+∞` on unbounded growth in either
/// direction. For `w = 0` the supremum is `−λ Φ(0+)`.
fn inner_sup_log(phi: &OrliczFunction, w: f64, lambda: f64) -> f64 {
    if w == 0.0 {
        return -lambda * phi.right_limit_at_zero().to_f64();
    }
    let k = |y: f64| w * y - lambda * phi.eval(y.exp()).to_f64();
    // Doubling stops at ±LOG_CAP so that e^y stays finite; still rising
    // there counts as unbounded.
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    loop {
        let next = (2.0 * hi).min(LOG_CAP);
        if k(next) <= k(hi) {
            hi = next;
            break;
        }
        if next == LOG_CAP {
            return f64::INFINITY;
        }
        hi = next;
    }
    loop {
        let next = (2.0 * lo).max(-LOG_CAP);
        if k(next) <= k(lo) {
            lo = next;
            break;
        }
        if next == -LOG_CAP {
            return f64::INFINITY;
        }
        lo = next;
    }
    let (_, v) = golden_max(k, lo, hi, 1e-13 * (hi - lo), 400);
    v
}

/// `β(Q)` from the primal problem
/// `sup { E[φ x] : E[Φ(x)] ≤ 1, x ≥ 0 }` through its separable Lagrangian
/// `inf_λ λ + Σ pᵢ sup_x (φᵢ x − λ Φ(x))`, each inner problem solved
/// directly in `x`.
pub fn beta_primal(phi: &OrliczFunction, q: &MeasureChange, _tol: f64) -> Result<f64> {
    require_convex(phi)?;
    let probs = q.space().probs().to_vec();
    let density = q.density().to_vec();
    let dual = |lambda: f64| {
        let mut total = lambda;
        for (p, &d) in probs.iter().zip(&density) {
            total += p * inner_sup_linear(phi, d, lambda);
            if !total.is_finite() {
                return f64::INFINITY;
            }
        }
        total
    };
    let value = minimize_convex_log(dual, MULTIPLIER_LO, MULTIPLIER_HI);
    Ok(if value.is_finite() { 1.0 / value } else { 0.0 })
}

/// `β(Q) = (inf_{μ>0} (1/μ) E[1 + Ψ(μ φ)])⁻¹` with `Ψ` the convex
/// conjugate of `Φ`.
pub fn beta_conjugate(phi: &OrliczFunction, q: &MeasureChange, _tol: f64) -> Result<f64> {
    require_convex(phi)?;
    let probs = q.space().probs();
    let density = q.density();
    let objective = |mu: f64| {
        let mut total = ExtendedReal::ZERO;
        for (p, &d) in probs.iter().zip(density) {
            let psi = phi.conjugate(mu * d).unwrap_or(ExtendedReal::PosInfinity);
            total = total + (ExtendedReal::ONE + psi).scale(*p);
        }
        total.to_f64() / mu
    };
    let value = minimize_convex_log(objective, MULTIPLIER_LO, MULTIPLIER_HI);
    Ok(if value.is_finite() { 1.0 / value } else { 0.0 })
}

/// `α(Q) = exp(−sup { E_Q[log X] : E[Φ(X)] ≤ 1 })`.
///
/// Closed forms for the geometric mean (`1` at `Q = P`, else `0`), power
/// functions (`exp(−H(Q|P)/p)`) and geometric expectiles (`1` when
/// `b·max φ ≤ a·min φ`, else `0`); otherwise the log-coordinate Lagrangian.
pub fn alpha_penalty(phi: &OrliczFunction, q: &MeasureChange, _tol: f64) -> Result<f64> {
    require_ga_convex(phi)?;
    let density = q.density();
    let dmax = density.iter().copied().fold(0.0, f64::max);
    let dmin = density.iter().copied().fold(f64::INFINITY, f64::min);
    match phi.family() {
        Family::GeometricMean => return Ok(if q.is_identity(0.0) { 1.0 } else { 0.0 }),
        Family::Power { p } => {
            let h = relative_entropy(q, &MeasureChange::identity(q.space().clone())).to_f64();
            return Ok((-h / p).exp());
        }
        Family::GeometricExpectile { a, b } => return Ok(if b * dmax <= a * dmin { 1.0 } else { 0.0 }),
        _ => {}
    }
    alpha_lagrangian(phi, q)
}

/// The generic route of [`alpha_penalty`], exposed for cross-checks.
pub fn alpha_lagrangian(phi: &OrliczFunction, q: &MeasureChange) -> Result<f64> {
    require_ga_convex(phi)?;
    let probs = q.space().probs().to_vec();
    let density = q.density().to_vec();
    let dual = |lambda: f64| {
        let mut total = lambda;
        for (p, &d) in probs.iter().zip(&density) {
            total += p * inner_sup_log(phi, d, lambda);
            if !total.is_finite() {
                return f64::INFINITY;
            }
        }
        total
    };
    let value = minimize_convex_log(dual, MULTIPLIER_LO, MULTIPLIER_HI);
    Ok((-value).exp())
}

/// `H(R, Q) = Σ pᵢ rᵢ log(rᵢ/qᵢ)` with `0 log 0 = 0`; `+∞` unless `R ≪ Q`.
pub fn relative_entropy(r: &MeasureChange, q: &MeasureChange) -> ExtendedReal {
    let mut total = 0.0;
    for ((&ri, &qi), p) in r.density().iter().zip(q.density()).zip(r.space().probs()) {
        if ri == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return ExtendedReal::PosInfinity;
        }
        total += p * ri * (ri / qi).ln();
    }
    ExtendedReal::Finite(total)
}

/// All compositions of `total` into `parts` nonnegative integers, in
/// lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn grid_divisions(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(OrliczError::InvalidParameter(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round();
    if ((n * step) - 1.0).abs() > 1e-9 {
        return Err(OrliczError::InvalidParameter(format!("grid step {step} must divide 1")));
    }
    Ok(n as usize)
}

/// Every measure `Q` on `space` with probabilities on the lattice
/// `step · ℕ`, in lexicographic order of `Q`.
pub fn simplex_grid(space: &Arc<FiniteProbabilitySpace>, step: f64) -> Result<Vec<MeasureChange>> {
    let divisions = grid_divisions(step)?;
    compositions(divisions, space.len())
        .into_iter()
        .map(|ks| {
            let q: Vec<f64> = ks.iter().map(|&k| k as f64 / divisions as f64).collect();
            MeasureChange::from_probabilities(space.clone(), &q)
        })
        .collect()
}

fn require_positive(x: &RandomVariable) -> Result<()> {
    if x.values().iter().any(|&v| v <= 0.0) {
        return Err(OrliczError::DomainError("geometric certificates need strictly positive outcomes".into()));
    }
    Ok(())
}

fn penalty_and_bound(phi: &OrliczFunction, x: &RandomVariable, q: &MeasureChange, kind: DualKind, tol: f64) -> Result<(f64, f64)> {
    match kind {
        DualKind::Arithmetic => {
            let beta = beta_conjugate(phi, q, tol)?;
            Ok((beta, if beta == 0.0 { 0.0 } else { beta * q.expect(x)? }))
        }
        DualKind::Geometric => {
            let alpha = alpha_penalty(phi, q, tol)?;
            Ok((alpha, if alpha == 0.0 { 0.0 } else { alpha * q.expect_log(x)?.exp() }))
        }
    }
}

/// Larger bound wins; ties go to the lexicographically smaller density so
/// the reduction is independent of evaluation order.
fn better(a: &DualCertificate, b: &DualCertificate) -> bool {
    match a.lower_bound.total_cmp(&b.lower_bound) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            let (da, db) = (a.measure.density(), b.measure.density());
            da.iter().zip(db).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) == Some(Ordering::Less)
        }
    }
}

fn check_kind(phi: &OrliczFunction, x: &RandomVariable, kind: DualKind) -> Result<()> {
    match kind {
        DualKind::Arithmetic => require_convex(phi),
        DualKind::Geometric => {
            require_ga_convex(phi)?;
            require_positive(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualSearchOptions {
    pub grid_step: f64,
    /// Tolerance of the weak-duality check `bound ≤ primal + tol`.
    pub tol: f64,
    pub mode: SearchMode,
    /// Seed for the local search's random starts.
    pub seed: u64,
    /// Zoom levels after the exhaustive grid: each searches a lattice ten
    /// times finer around the incumbent, re-centring until it stops moving.
    pub refine_levels: usize,
}

impl DualSearchOptions {
    pub fn new(grid_step: f64, tol: f64) -> Self {
        DualSearchOptions { grid_step, tol, mode: SearchMode::Auto, seed: 0, refine_levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSearchResult {
    pub certificate: DualCertificate,
    pub primal: f64,
    /// `primal − best bound`; negative only through solver error.
    pub gap: f64,
    /// Best bound on the base grid, before zooming.
    pub grid_bound: f64,
    /// Base grid step, or `None` for the local search.
    pub grid_step: Option<f64>,
    /// Lattice step of the finest zoom level actually searched.
    pub final_step: Option<f64>,
    pub evaluated: usize,
    /// Measures whose bound exceeded `primal + tol`.
    pub weak_duality_violations: usize,
    pub mode: SearchMode,
}

/// [`dual_search_with`] using default options for the given step.
pub fn dual_search(phi: &OrliczFunction, x: &RandomVariable, kind: DualKind, grid_step: f64, tol: f64) -> Result<DualSearchResult> {
    dual_search_with(phi, x, kind, &DualSearchOptions::new(grid_step, tol))
}

/// Searches for the best dual certificate. The exhaustive grid always
/// includes `Q = P`; every measure evaluated, on the grid or in a zoom
/// level, is checked against the primal premium for weak duality.
pub fn dual_search_with(phi: &OrliczFunction, x: &RandomVariable, kind: DualKind, opts: &DualSearchOptions) -> Result<DualSearchResult> {
    check_kind(phi, x, kind)?;
    let n = x.len();
    let exhaustive = match opts.mode {
        SearchMode::Exhaustive if n > 4 => return Err(OrliczError::DimensionTooLarge(n)),
        SearchMode::Exhaustive => true,
        SearchMode::Auto => n <= 4,
        SearchMode::Local => false,
    };
    let tol = opts.tol;
    let primal = orlicz_premium(phi, x, DEFAULT_TOL.min(tol))?.value;
    let evaluate = |q: MeasureChange| -> Result<DualCertificate> {
        let (penalty, lower_bound) = penalty_and_bound(phi, x, &q, kind, tol)?;
        Ok(DualCertificate { measure: q, penalty, lower_bound, kind })
    };
    let pick = |cs: Vec<DualCertificate>| cs.into_iter().reduce(|a, b| if better(&b, &a) { b } else { a }).expect("candidate set is never empty");
    let mut evaluated = 0;
    let mut weak_duality_violations = 0;
    let mut tally = |cs: &[DualCertificate]| {
        evaluated += cs.len();
        weak_duality_violations += cs.iter().filter(|c| c.lower_bound > primal + tol).count();
    };

    let (best, grid_step, final_step) = if exhaustive {
        let divisions = grid_divisions(opts.grid_step)?;
        let mut grid = simplex_grid(x.space(), opts.grid_step)?;
        grid.push(MeasureChange::identity(x.space().clone()));
        let certs = grid.into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()?;
        tally(&certs);
        let mut best = pick(certs);
        let grid_bound = best.lower_bound;
        let mut lattice = divisions as u64;
        for _ in 0..opts.refine_levels {
            lattice *= 10;
            // The objective is quasi-concave in Q (linear over a convex,
            // positively homogeneous function), so re-centring until the
            // incumbent stays put climbs to the lattice maximum.
            for _ in 0..MAX_RECENTRES {
                let zoom = zoom_lattice(x.space(), &best.measure.probabilities(), lattice)?;
                let certs = zoom.into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()?;
                tally(&certs);
                let candidate = pick(certs);
                if !better(&candidate, &best) {
                    break;
                }
                best = candidate;
            }
        }
        let final_step = 1.0 / lattice as f64;
        (best, Some((opts.grid_step, grid_bound)), Some(final_step))
    } else {
        let certs = local_search(x, opts.seed, &evaluate)?;
        tally(&certs);
        (pick(certs), None, None)
    };
    let gap = primal - best.lower_bound;
    Ok(DualSearchResult {
        grid_bound: grid_step.map_or(best.lower_bound, |(_, b)| b),
        certificate: best,
        primal,
        gap,
        grid_step: grid_step.map(|(s, _)| s),
        final_step,
        evaluated,
        weak_duality_violations,
        mode: if exhaustive { SearchMode::Exhaustive } else { SearchMode::Local },
    })
}

/// Measures on the lattice `ℕ / lattice` within ten lattice steps of
/// `centre` in every free coordinate (the last one absorbs the remainder).
fn zoom_lattice(space: &Arc<FiniteProbabilitySpace>, centre: &[f64], lattice: u64) -> Result<Vec<MeasureChange>> {
    const RADIUS: i64 = 10;
    let n = centre.len();
    let base: Vec<i64> = centre.iter().map(|&c| (c * lattice as f64).round() as i64).collect();
    let mut out = Vec::new();
    let mut offset = vec![-RADIUS; n - 1];
    loop {
        let mut ks: Vec<i64> = base[..n - 1].iter().zip(&offset).map(|(b, o)| b + o).collect();
        let used: i64 = ks.iter().sum();
        let last = lattice as i64 - used;
        if ks.iter().all(|&k| k >= 0) && last >= 0 {
            ks.push(last);
            let q: Vec<f64> = ks.iter().map(|&k| k as f64 / lattice as f64).collect();
            out.push(MeasureChange::from_probabilities(space.clone(), &q)?);
        }
        // odometer over the offsets
        let mut i = 0;
        loop {
            if i == n - 1 {
                return Ok(out);
            }
            offset[i] += 1;
            if offset[i] <= RADIUS {
                break;
            }
            offset[i] = -RADIUS;
            i += 1;
        }
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Multi-start projected gradient ascent over measure probabilities with
/// central-difference gradients. Returns every start's final certificate
/// plus `Q = P`.
fn local_search<F>(x: &RandomVariable, seed: u64, evaluate: &F) -> Result<Vec<DualCertificate>>
where
    F: Fn(MeasureChange) -> Result<DualCertificate> + Sync,
{
    let space = x.space().clone();
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = vec![space.probs().to_vec()];
    while starts.len() < LOCAL_STARTS {
        let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        starts.push(raw.iter().map(|r| r / s).collect());
    }
    let score = |q: &[f64]| -> f64 {
        // renormalize against rounding before building the measure
        let s: f64 = q.iter().sum();
        let q: Vec<f64> = q.iter().map(|v| v / s).collect();
        MeasureChange::from_probabilities(space.clone(), &q)
            .and_then(evaluate)
            .map(|c| c.lower_bound)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let results: Vec<Result<DualCertificate>> = starts
        .into_par_iter()
        .map(|mut q| {
            let mut value = score(&q);
            let mut step = 0.1;
            for _ in 0..LOCAL_ITERATIONS {
                let h = 1e-6;
                let grad: Vec<f64> = (0..n)
                    .map(|i| {
                        let mut up = q.clone();
                        let mut down = q.clone();
                        up[i] += h;
                        down[i] = (down[i] - h).max(0.0);
                        (score(&up) - score(&down)) / (up[i] - down[i])
                    })
                    .collect();
                let mut improved = false;
                while step > 1e-12 {
                    let trial = project_simplex(&q.iter().zip(&grad).map(|(a, g)| a + step * g).collect::<Vec<_>>());
                    let v = score(&trial);
                    if v > value {
                        q = trial;
                        value = v;
                        step *= 1.5;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            let s: f64 = q.iter().sum();
            let q: Vec<f64> = q.iter().map(|v| v / s).collect();
            evaluate(MeasureChange::from_probabilities(space.clone(), &q)?)
        })
        .collect();
    results.into_iter().collect()
}

/// `β(Q)` for every measure on the simplex grid.
pub fn beta_grid(phi: &OrliczFunction, space: &Arc<FiniteProbabilitySpace>, step: f64, tol: f64) -> Result<Vec<(MeasureChange, f64)>> {
    require_convex(phi)?;
    simplex_grid(space, step)?
        .into_par_iter()
        .map(|q| {
            let b = beta_conjugate(phi, &q, tol)?;
            Ok((q, b))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaFromBeta {
    pub value: f64,
    pub argmax: MeasureChange,
    /// Largest drop of the objective from the maximizer to a grid neighbour
    /// (probabilities differing by one step in two coordinates): an
    /// estimate of how much the grid can miss.
    pub gap: f64,
}

/// `α(R) ≈ max_Q β(Q) exp(−H(R, Q))` over the supplied grid.
pub fn alpha_from_beta(beta_values: &[(MeasureChange, f64)], r: &MeasureChange) -> Result<AlphaFromBeta> {
    if beta_values.is_empty() {
        return Err(OrliczError::InvalidParameter("empty penalty grid".into()));
    }
    let objective = |(q, b): &(MeasureChange, f64)| b * (-relative_entropy(r, q).to_f64()).exp();
    let scores: Vec<f64> = beta_values.iter().map(objective).collect();
    let best = (0..scores.len())
        .reduce(|i, j| if scores[j] > scores[i] { j } else { i })
        .expect("non-empty");
    let best_q = beta_values[best].0.probabilities();
    let step = beta_values
        .iter()
        .flat_map(|(q, _)| q.probabilities())
        .filter(|&v| v > 1e-12)
        .fold(1.0f64, f64::min);
    let gap = beta_values
        .iter()
        .zip(&scores)
        .filter(|((q, _), _)| {
            let d: f64 = q.probabilities().iter().zip(&best_q).map(|(a, b)| (a - b).abs()).sum();
            d > 0.0 && d <= 2.0 * step + 1e-9
        })
        .map(|(_, s)| scores[best] - s)
        .fold(0.0, f64::max);
    Ok(AlphaFromBeta { value: scores[best], argmax: beta_values[best].0.clone(), gap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HgDualReport {
    /// `max E_Q[X]` over grid measures with `|β(Q) − 1| ≤ grid_step`.
    pub dual_value: f64,
    pub argmax: MeasureChange,
    pub admissible: usize,
    pub primal: f64,
    pub difference: f64,
    /// `|dual − primal| ≤ 2 · grid_step · max(1, |primal|)`.
    pub agrees: bool,
    pub grid_step: f64,
}

/// Compares the HG risk measure with `sup E_Q[X]` over measures whose
/// penalty is one.
pub fn hg_dual_check(phi: &OrliczFunction, x: &RandomVariable, grid_step: f64, tol: f64) -> Result<HgDualReport> {
    require_convex(phi)?;
    if x.len() > 4 {
        return Err(OrliczError::DimensionTooLarge(x.len()));
    }
    let primal = hg_risk_measure(phi, x, tol)?.value;
    let mut grid = beta_grid(phi, x.space(), grid_step, tol)?;
    let p = MeasureChange::identity(x.space().clone());
    let beta_p = beta_conjugate(phi, &p, tol)?;
    grid.push((p, beta_p));
    let mut admissible = 0;
    let mut best: Option<(f64, &MeasureChange)> = None;
    for (q, b) in &grid {
        if (b - 1.0).abs() <= grid_step {
            admissible += 1;
            let v = q.expect(x)?;
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, q));
            }
        }
    }
    let (dual_value, argmax) = best.expect("Q = P has β = 1");
    let difference = dual_value - primal;
    Ok(HgDualReport {
        dual_value,
        argmax: argmax.clone(),
        admissible,
        primal,
        difference,
        agrees: difference.abs() <= 2.0 * grid_step * primal.abs().max(1.0),
        grid_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(space: &Arc<FiniteProbabilitySpace>, density: &[f64]) -> MeasureChange {
        MeasureChange::new(space.clone(), density.to_vec()).unwrap()
    }

    #[test]
    fn beta_power_two_is_reciprocal_norm() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let phi = OrliczFunction::power(2.0).unwrap();
        let q = measure(&s, &[0.5, 1.5]);
        let expected = 1.0 / 1.25f64.sqrt();
        assert!((beta_primal(&phi, &q, 1e-10).unwrap() - expected).abs() < 1e-8);
        assert!((beta_conjugate(&phi, &q, 1e-10).unwrap() - expected).abs() < 1e-8);
        let p = MeasureChange::identity(s.clone());
        assert!((beta_primal(&phi, &p, 1e-10).unwrap() - 1.0).abs() < 1e-8);
        assert!((beta_conjugate(&phi, &p, 1e-10).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn beta_mean_is_reciprocal_max_density() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let phi = OrliczFunction::power(1.0).unwrap();
        for d in [[1.0, 1.0], [0.4, 1.6], [0.0, 2.0]] {
            let q = measure(&s, &d);
            let expected = 1.0 / d[1];
            assert!((beta_primal(&phi, &q, 1e-10).unwrap() - expected).abs() < 1e-8, "{d:?}");
            assert!((beta_conjugate(&phi, &q, 1e-10).unwrap() - expected).abs() < 1e-8, "{d:?}");
        }
    }

    #[test]
    fn beta_rejects_nonconvex() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let q = MeasureChange::identity(s);
        assert_eq!(beta_primal(&OrliczFunction::quantile_step(0.3).unwrap(), &q, 1e-10), Err(OrliczError::NotConvex));
        assert_eq!(alpha_penalty(&OrliczFunction::quantile_step(0.3).unwrap(), &q, 1e-10), Err(OrliczError::NotGAConvex));
    }

    #[test]
    fn alpha_examples() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let p = MeasureChange::identity(s.clone());
        let q = measure(&s, &[0.5, 1.5]);
        let gm = OrliczFunction::geometric_mean();
        assert_eq!(alpha_penalty(&gm, &p, 1e-10).unwrap(), 1.0);
        assert_eq!(alpha_penalty(&gm, &q, 1e-10).unwrap(), 0.0);
        assert!((alpha_lagrangian(&gm, &p).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(alpha_lagrangian(&gm, &q).unwrap(), 0.0);
        let pow2 = OrliczFunction::power(2.0).unwrap();
        assert!((alpha_penalty(&pow2, &p, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        let closed = alpha_penalty(&pow2, &q, 1e-10).unwrap();
        assert!((alpha_lagrangian(&pow2, &q).unwrap() - closed).abs() < 1e-7);
    }

    #[test]
    fn relative_entropy_examples() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let r = measure(&s, &[1.5, 0.5]);
        let one = MeasureChange::identity(s.clone());
        assert_eq!(relative_entropy(&r, &r), ExtendedReal::ZERO);
        let h = relative_entropy(&r, &one).to_f64();
        assert!((h - (0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln())).abs() < 1e-15);
        assert!((h - 0.130812).abs() < 1e-6);
        let point = measure(&s, &[2.0, 0.0]);
        assert_eq!(relative_entropy(&r, &point), ExtendedReal::PosInfinity);
    }

    #[test]
    fn grid_has_expected_size_and_order() {
        let s = FiniteProbabilitySpace::uniform(3).unwrap();
        let g = simplex_grid(&s, 0.25).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0].probabilities(), vec![0.0, 0.0, 1.0]);
        assert!(simplex_grid(&s, 0.3).is_err());
    }

    #[test]
    fn projection_lands_on_simplex() {
        let w = project_simplex(&[0.8, 0.6, -0.2]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[0] - 0.6).abs() < 1e-12 && (w[1] - 0.4).abs() < 1e-12 && w[2] == 0.0);
    }

    #[test]
    fn power_two_dual_search_recovers_norm() {
        let x = RandomVariable::uniform(vec![1.0, 2.0]).unwrap();
        let phi = OrliczFunction::power(2.0).unwrap();
        let r = dual_search(&phi, &x, DualKind::Arithmetic, 0.01, 1e-9).unwrap();
        assert!((r.certificate.lower_bound - 2.5f64.sqrt()).abs() < 1e-3);
        assert_eq!(r.weak_duality_violations, 0);
        // optimal density is proportional to X
        let d = r.certificate.measure.density();
        assert!((d[1] / d[0] - 2.0).abs() < 0.1);
    }

    #[test]
    fn constant_has_certificate_at_p() {
        let x = RandomVariable::uniform(vec![1.7, 1.7, 1.7]).unwrap();
        for phi in [OrliczFunction::power(2.0).unwrap(), OrliczFunction::expectile(0.8).unwrap()] {
            let r = dual_search(&phi, &x, DualKind::Arithmetic, 0.05, 1e-9).unwrap();
            assert!((r.certificate.lower_bound - 1.7).abs() < 1e-8);
        }
    }

    #[test]
    fn geometric_mean_certificate_sits_at_p() {
        let x = RandomVariable::uniform(vec![0.5, 2.0]).unwrap();
        let r = dual_search(&OrliczFunction::geometric_mean(), &x, DualKind::Geometric, 0.01, 1e-9).unwrap();
        assert!(r.certificate.measure.is_identity(0.0));
        assert!((r.certificate.lower_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_mode_caps_dimension() {
        let x = RandomVariable::uniform(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let phi = OrliczFunction::power(2.0).unwrap();
        assert_eq!(
            dual_search_with(&phi, &x, DualKind::Arithmetic, &DualSearchOptions { mode: SearchMode::Exhaustive, ..DualSearchOptions::new(0.05, 1e-9) }).unwrap_err(),
            OrliczError::DimensionTooLarge(5)
        );
        let r = dual_search_with(&phi, &x, DualKind::Arithmetic, &DualSearchOptions { seed: 3, ..DualSearchOptions::new(0.05, 1e-9) }).unwrap();
        assert_eq!(r.mode, SearchMode::Local);
        assert!(r.gap >= -1e-9 && r.gap < 1e-3, "gap {}", r.gap);
    }

    #[test]
    fn alpha_from_flat_beta_is_one() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let grid: Vec<_> = simplex_grid(&s, 0.1).unwrap().into_iter().map(|q| (q, 1.0)).collect();
        let r = measure(&s, &[0.4, 1.6]);
        let out = alpha_from_beta(&grid, &r).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert_eq!(out.argmax.probabilities(), vec![0.2, 0.8]);
    }

    #[test]
    fn hg_dual_examples() {
        let x = RandomVariable::uniform(vec![1.0, 3.0]).unwrap();
        let r = hg_dual_check(&OrliczFunction::power(1.0).unwrap(), &x, 0.01, 1e-10).unwrap();
        assert!((r.dual_value - 2.0).abs() < 1e-12 && r.agrees);
        let y = RandomVariable::uniform(vec![0.0, 1.0]).unwrap();
        let r = hg_dual_check(&OrliczFunction::expectile(0.8).unwrap(), &y, 0.01, 1e-10).unwrap();
        assert!((r.dual_value - 0.8).abs() < 1e-12 && r.agrees, "{r:?}");
    }
}
