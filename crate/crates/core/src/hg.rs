//! The Haezendonck–Goovaerts risk measure
//! `ρ_HG(X) = inf_x { x + H_Φ((X − x)₊) }`.
//!
//! The profile `g(x) = x + H_Φ((X−x)₊)` equals `x` for `x ≥ ess sup X`, so
//! the search runs over `[min X − range − 1, ess sup X]`, extended downward
//! when the minimum sits at the lower end. Convex `Φ` makes `g` convex and
//! golden-section refinement applies; otherwise the grid is refined
//! recursively around the best point, since `g` may have kinks and several
//! local minima.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OrliczError, Result};
use crate::numeric::{golden_min, lin_space};
use crate::orlicz::{OrliczFunction, TriState};
use crate::premium::{orlicz_premium, DEFAULT_TOL};
use crate::prob::RandomVariable;

const COARSE_POINTS: usize = 256;
const REFINE_POINTS: usize = 33;
/// Downward extensions of the search interval before giving up.
const MAX_EXTENSIONS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HGResult {
    pub value: f64,
    pub minimizer_x: f64,
    /// Every evaluated `(x, g(x))`, sorted by `x`.
    pub profile: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

/// `g(x) = x + H_Φ((X−x)₊)`.
pub fn hg_profile_value(phi: &OrliczFunction, x: &RandomVariable, at: f64, tol: f64) -> Result<f64> {
    if at >= x.ess_sup() {
        return Ok(at);
    }
    let excess = x.map(|v| (v - at).max(0.0))?;
    Ok(at + orlicz_premium(phi, &excess, tol)?.value)
}

pub fn hg_risk_measure(phi: &OrliczFunction, x: &RandomVariable, tol: f64) -> Result<HGResult> {
    phi.ensure_valid()?;
    if !(tol >= f64::EPSILON) {
        return Err(OrliczError::ToleranceTooSmall(tol));
    }
    let sup = x.ess_sup();
    let inf = x.ess_inf();
    let mut notes = Vec::new();
    if sup == inf {
        // constant: g(x) = x + (c − x) below c and x above
        return Ok(HGResult { value: sup, minimizer_x: sup, profile: vec![(sup, sup)], notes });
    }
    let range = sup - inf;
    let profile = RefCell::new(Vec::new());
    let g = |at: f64| -> Result<f64> {
        let v = hg_profile_value(phi, x, at, tol)?;
        profile.borrow_mut().push((at, v));
        Ok(v)
    };
    let scan = |lo: f64, hi: f64, n: usize| -> Result<Vec<(f64, f64)>> {
        let pts = lin_space(lo, hi, n);
        let vals = pts.par_iter().map(|&a| hg_profile_value(phi, x, a, tol)).collect::<Result<Vec<_>>>()?;
        let out: Vec<(f64, f64)> = pts.into_iter().zip(vals).collect();
        profile.borrow_mut().extend(out.iter().copied());
        Ok(out)
    };
    let best_index = |pts: &[(f64, f64)]| (0..pts.len()).reduce(|i, j| if pts[j].1 < pts[i].1 { j } else { i }).unwrap();

    let mut lo = inf - range - 1.0;
    let mut pts = scan(lo, sup, COARSE_POINTS)?;
    let mut extensions = 0;
    while best_index(&pts) == 0 {
        if extensions == MAX_EXTENSIONS {
            notes.push(format!("search floor reached at x = {lo}; the minimum may lie further down"));
            break;
        }
        extensions += 1;
        let width = sup - lo;
        lo -= width;
        pts = scan(lo, sup, COARSE_POINTS)?;
    }
    if extensions > 0 {
        notes.push(format!("search interval extended downward {extensions} time(s) to x = {lo}"));
    }

    let scale = range.max(sup.abs()).max(1.0);
    let x_tol = tol * scale;
    let i = best_index(&pts);
    let (mut a, mut b) = (pts[i.saturating_sub(1)].0, pts[(i + 1).min(pts.len() - 1)].0);
    if phi.is_convex() == TriState::Yes {
        let err = RefCell::new(None);
        golden_min(
            |t| match g(t) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::INFINITY
                }
            },
            a,
            b,
            x_tol,
            500,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
    } else {
        while b - a > x_tol {
            let fine = scan(a, b, REFINE_POINTS)?;
            let j = best_index(&fine);
            let (na, nb) = (fine[j.saturating_sub(1)].0, fine[(j + 1).min(fine.len() - 1)].0);
            if nb - na >= b - a {
                break;
            }
            a = na;
            b = nb;
        }
    }

    let mut profile = profile.into_inner();
    profile.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    profile.dedup_by(|p, q| p.0 == q.0);
    let &(minimizer_x, value) = profile.iter().min_by(|p, q| p.1.total_cmp(&q.1).then(p.0.total_cmp(&q.0))).expect("profile is non-empty");
    Ok(HGResult { value, minimizer_x, profile, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GgCounterexampleReport {
    /// `ρ_HG(X)` for `X = (1/2, 2)` on the uniform two-point space.
    pub rho_x: f64,
    /// `ρ_HG(Y)` for `Y = 1/X`.
    pub rho_y: f64,
    /// `ρ_HG(√(XY)) = ρ_HG(1)`.
    pub rho_geometric_mix: f64,
    /// `√(ρ_HG(X) ρ_HG(Y))`.
    pub geometric_bound: f64,
    pub tol: f64,
    pub passed: bool,
    /// Why the check failed, if it did.
    pub failure: Option<String>,
}

/// Shows the geometric-mean HG risk measure is not GG-convex:
/// `ρ(√(XY)) = 1 > 1/2 = √(ρ(X) ρ(Y))`.
pub fn gg_counterexample_check(tol: f64) -> Result<GgCounterexampleReport> {
    gg_counterexample_check_at(0.5, tol)
}

/// As [`gg_counterexample_check`] with `X = (low, 2)`.
pub fn gg_counterexample_check_at(low: f64, tol: f64) -> Result<GgCounterexampleReport> {
    let phi = OrliczFunction::geometric_mean();
    let solver_tol = if tol >= f64::EPSILON { DEFAULT_TOL.min(tol) } else { DEFAULT_TOL };
    let x = RandomVariable::uniform(vec![low, 2.0])?;
    let y = x.map(|v| 1.0 / v)?;
    let mix = x.zip_with(&y, |a, b| (a * b).sqrt())?;
    let rho_x = hg_risk_measure(&phi, &x, solver_tol)?.value;
    let rho_y = hg_risk_measure(&phi, &y, solver_tol)?.value;
    let rho_geometric_mix = hg_risk_measure(&phi, &mix, solver_tol)?.value;
    let geometric_bound = (rho_x * rho_y).sqrt();
    let near = |v: f64, target: f64| (v - target).abs() <= tol;
    let failure = if !(tol >= f64::EPSILON) {
        // the solvers can land on the exact values, so a zero tolerance is
        // rejected outright rather than left to rounding luck
        Some(format!("tolerance {tol} is below machine precision"))
    } else if !(near(rho_x, 0.5) && near(rho_y, 0.5) && near(rho_geometric_mix, 1.0)) {
        Some(format!("expected (0.5, 0.5, 1), computed ({rho_x}, {rho_y}, {rho_geometric_mix})"))
    } else if !(rho_geometric_mix > geometric_bound + tol) {
        Some(format!("no violation: {rho_geometric_mix} <= {geometric_bound} + {tol}"))
    } else {
        None
    };
    Ok(GgCounterexampleReport { rho_x, rho_y, rho_geometric_mix, geometric_bound, tol, passed: failure.is_none(), failure })
}
