//! Finite probability spaces, nonnegative random variables on them, discrete
//! laws, measure changes and the comonotone integral.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{OrliczError, Result};
use crate::extended::ExtendedReal;

/// Probabilities must sum to one within this.
pub const MASS_TOL: f64 = 1e-12;
/// Atom values closer than this (relative to max(1, |v|)) are merged.
pub const MERGE_TOL: f64 = 1e-12;

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= MERGE_TOL * a.abs().max(1.0)
}

/// `n ≥ 1` outcomes with strictly positive probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteProbabilitySpace {
    probs: Vec<f64>,
}

impl FiniteProbabilitySpace {
    pub fn new(probs: Vec<f64>) -> Result<Arc<Self>> {
        if probs.is_empty() {
            return Err(OrliczError::InvalidSpace("need at least one outcome".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(OrliczError::InvalidSpace(format!("outcome {i} has probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(OrliczError::InvalidSpace(format!("probabilities sum to {total}")));
        }
        Ok(Arc::new(FiniteProbabilitySpace { probs }))
    }

    pub fn uniform(n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(OrliczError::InvalidSpace("need at least one outcome".into()));
        }
        Ok(Arc::new(FiniteProbabilitySpace { probs: vec![1.0 / n as f64; n] }))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_uniform(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] == w[1])
    }

    fn compatible(&self, other: &FiniteProbabilitySpace) -> bool {
        self.len() == other.len() && self.probs.iter().zip(&other.probs).all(|(a, b)| (a - b).abs() <= MASS_TOL)
    }
}

fn check_same_space(a: &FiniteProbabilitySpace, b: &FiniteProbabilitySpace) -> Result<()> {
    if a.len() != b.len() {
        return Err(OrliczError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if !a.compatible(b) {
        return Err(OrliczError::InvalidSpace("objects live on different probability spaces".into()));
    }
    Ok(())
}

/// A nonnegative random variable, one value per outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomVariable {
    #[serde(skip)]
    space: Arc<FiniteProbabilitySpace>,
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(space: Arc<FiniteProbabilitySpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(OrliczError::DimensionMismatch { expected: space.len(), got: values.len() });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(OrliczError::InvalidRandomVariable(format!("value {v} at outcome {i} is not a finite nonnegative number")));
        }
        Ok(RandomVariable { space, values })
    }

    /// Values on a uniform space, one outcome per entry.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let space = FiniteProbabilitySpace::uniform(values.len())?;
        RandomVariable::new(space, values)
    }

    pub fn constant(space: Arc<FiniteProbabilitySpace>, c: f64) -> Result<Self> {
        let n = space.len();
        RandomVariable::new(space, vec![c; n])
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        self.space.probs()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ pᵢ f(xᵢ)` in extended arithmetic (`−∞ + ∞ = +∞`).
    pub fn expect<F: Fn(f64) -> ExtendedReal>(&self, f: F) -> ExtendedReal {
        self.values.iter().zip(self.probs()).map(|(&x, &p)| f(x).scale(p)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(self.probs()).map(|(x, p)| x * p).sum()
    }

    pub fn ess_sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ess_inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn prob_zero(&self) -> f64 {
        self.values.iter().zip(self.probs()).filter(|(x, _)| **x == 0.0).map(|(_, p)| p).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution::from_atoms_unchecked(self.values.iter().copied().zip(self.probs().iter().copied()).collect())
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        RandomVariable::new(self.space.clone(), self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|x| c * x)
    }

    pub fn shift(&self, m: f64) -> Result<Self> {
        self.map(|x| x + m)
    }

    /// Pointwise combination of two variables on the same space.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &RandomVariable, f: F) -> Result<Self> {
        check_same_space(&self.space, &other.space)?;
        RandomVariable::new(self.space.clone(), self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Reorders outcomes: outcome `i` of the result carries outcome `perm[i]`
    /// of `self`, probabilities included.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let probs: Vec<f64> = perm.iter().map(|&i| self.probs()[i]).collect();
        let values = perm.iter().map(|&i| self.values[i]).collect();
        RandomVariable::new(FiniteProbabilitySpace::new(probs)?, values)
    }
}

/// Atoms `(value, probability)` sorted by value with ties merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(OrliczError::InvalidSpace("distribution needs at least one atom".into()));
        }
        for &(v, p) in &atoms {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OrliczError::InvalidRandomVariable(format!("atom value {v} is not finite and nonnegative")));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(OrliczError::InvalidSpace(format!("atom probability {p} is not positive")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(OrliczError::InvalidSpace(format!("atom probabilities sum to {total}")));
        }
        Ok(Self::from_atoms_unchecked(atoms))
    }

    fn from_atoms_unchecked(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if same_value(last.0, v) => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        DiscreteDistribution { atoms: merged }
    }

    pub fn dirac(v: f64) -> Result<Self> {
        DiscreteDistribution::new(vec![(v, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.0 <= x).map(|a| a.1).sum()
    }

    /// Left quantile `inf { x : F(x) ≥ t }` for `t ∈ (0, 1]`. Cumulative sums
    /// are compared with a `1e−12` slack so that `t = 1` reaches the top atom.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(OrliczError::DomainError(format!("quantile level must lie in (0, 1], got {t}")));
        }
        let mut cum = 0.0;
        for &(v, p) in &self.atoms {
            cum += p;
            if cum >= t - MASS_TOL {
                return Ok(v);
            }
        }
        Ok(self.atoms[self.atoms.len() - 1].0)
    }

    /// `λF + (1−λ)G`, atom-wise merged.
    pub fn mixture(&self, other: &DiscreteDistribution, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(OrliczError::InvalidParameter(format!("mixture weight must lie in (0, 1), got {lambda}")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|&(v, p)| (v, lambda * p))
            .chain(other.atoms.iter().map(|&(v, p)| (v, (1.0 - lambda) * p)))
            .collect();
        Ok(Self::from_atoms_unchecked(atoms))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        DiscreteDistribution::new(self.atoms.iter().map(|&(v, p)| (c * v, p)).collect())
    }

    /// A random variable with this law, one outcome per atom.
    pub fn to_random_variable(&self) -> Result<RandomVariable> {
        let total: f64 = self.atoms.iter().map(|a| a.1).sum();
        let probs = self.atoms.iter().map(|a| a.1 / total).collect();
        RandomVariable::new(FiniteProbabilitySpace::new(probs)?, self.atoms.iter().map(|a| a.0).collect())
    }

    /// Loads CSV data: `value,probability` rows in [`DataMode::Distribution`]
    /// mode, one value per row in [`DataMode::Sample`] mode (uniform weights).
    /// A non-numeric first line is treated as a header; `#` starts a comment.
    pub fn from_csv(text: &str, mode: DataMode) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut first = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let Ok(nums) = parsed else {
                if first {
                    first = false;
                    continue;
                }
                return Err(OrliczError::InvalidRandomVariable(format!("line {}: cannot parse `{line}`", lineno + 1)));
            };
            first = false;
            match (mode, nums.as_slice()) {
                (DataMode::Distribution, [v, p]) => atoms.push((*v, *p)),
                (DataMode::Sample, [v]) => atoms.push((*v, 1.0)),
                _ => {
                    return Err(OrliczError::InvalidRandomVariable(format!(
                        "line {}: expected {} column(s)",
                        lineno + 1,
                        if mode == DataMode::Distribution { 2 } else { 1 }
                    )))
                }
            }
        }
        if atoms.is_empty() {
            return Err(OrliczError::InvalidRandomVariable("no data rows".into()));
        }
        if mode == DataMode::Sample {
            let w = 1.0 / atoms.len() as f64;
            atoms.iter_mut().for_each(|a| a.1 = w);
        }
        DiscreteDistribution::new(atoms)
    }

    pub fn from_csv_file(path: &Path, mode: DataMode) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrliczError::InvalidRandomVariable(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv(&text, mode)
    }

    /// Serializes as `value,probability` CSV rows.
    pub fn to_csv(&self) -> String {
        self.atoms.iter().map(|(v, p)| format!("{v},{p}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    Distribution,
    Sample,
}

/// A probability `Q ≪ P` on the same space, stored as its density `dQ/dP`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureChange {
    #[serde(skip)]
    space: Arc<FiniteProbabilitySpace>,
    density: Vec<f64>,
}

impl MeasureChange {
    pub fn new(space: Arc<FiniteProbabilitySpace>, density: Vec<f64>) -> Result<Self> {
        if density.len() != space.len() {
            return Err(OrliczError::DimensionMismatch { expected: space.len(), got: density.len() });
        }
        if let Some(d) = density.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(OrliczError::InvalidMeasure(format!("density value {d} is negative or not finite")));
        }
        let mass: f64 = density.iter().zip(space.probs()).map(|(d, p)| d * p).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(OrliczError::InvalidMeasure(format!("E_P[density] = {mass}, expected 1")));
        }
        Ok(MeasureChange { space, density })
    }

    /// Builds from the probabilities `Q({i})`.
    pub fn from_probabilities(space: Arc<FiniteProbabilitySpace>, q: &[f64]) -> Result<Self> {
        if q.len() != space.len() {
            return Err(OrliczError::DimensionMismatch { expected: space.len(), got: q.len() });
        }
        let density = q.iter().zip(space.probs()).map(|(q, p)| q / p).collect();
        MeasureChange::new(space, density)
    }

    /// `Q = P`.
    pub fn identity(space: Arc<FiniteProbabilitySpace>) -> Self {
        let n = space.len();
        MeasureChange { space, density: vec![1.0; n] }
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.density.iter().zip(self.space.probs()).map(|(d, p)| d * p).collect()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.density.iter().all(|d| (d - 1.0).abs() <= tol)
    }

    /// `E_Q[X]`.
    pub fn expect(&self, x: &RandomVariable) -> Result<f64> {
        check_same_space(&self.space, x.space())?;
        Ok(self.density.iter().zip(x.values()).zip(self.space.probs()).map(|((d, v), p)| p * d * v).sum())
    }

    /// `E_Q[log X]`; `−∞` when `Q` charges a zero of `X`.
    pub fn expect_log(&self, x: &RandomVariable) -> Result<f64> {
        check_same_space(&self.space, x.space())?;
        Ok(self
            .density
            .iter()
            .zip(x.values())
            .zip(self.space.probs())
            .filter(|((d, _), _)| **d > 0.0)
            .map(|((d, v), p)| p * d * v.ln())
            .sum())
    }
}

/// `∫₀¹ q_X(t) q_φ(t) dt`, integrated exactly over the merged breakpoints of
/// the two quantile step functions.
pub fn comonotone_integral(x: &RandomVariable, density: &MeasureChange) -> Result<f64> {
    check_same_space(x.space(), density.space())?;
    let mut xs: Vec<(f64, f64)> = x.values().iter().copied().zip(x.probs().iter().copied()).collect();
    let mut ds: Vec<(f64, f64)> = density.density().iter().copied().zip(x.probs().iter().copied()).collect();
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    ds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut i, mut j) = (0, 0);
    let (mut end_x, mut end_d) = (xs[0].1, ds[0].1);
    let (mut t, mut total) = (0.0, 0.0);
    while i < xs.len() && j < ds.len() {
        let end = end_x.min(end_d);
        total += (end - t) * xs[i].0 * ds[j].0;
        t = end;
        if end_x <= end {
            i += 1;
            if i < xs.len() {
                end_x += xs[i].1;
            }
        }
        if end_d <= end {
            j += 1;
            if j < ds.len() {
                end_d += ds[j].1;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(values: [f64; 2]) -> RandomVariable {
        RandomVariable::uniform(values.to_vec()).unwrap()
    }

    #[test]
    fn expectations() {
        let x = two_point([1.0, 3.0]);
        assert_eq!(x.expect(ExtendedReal::from), ExtendedReal::Finite(2.0));
        let y = two_point([0.5, 2.0]);
        assert_eq!(y.expect(|v| v.ln().into()), ExtendedReal::Finite(0.0));
        let z = two_point([0.0, 4.0]);
        assert_eq!(z.expect(|v| v.sqrt().into()), ExtendedReal::Finite(1.0));
        assert_eq!(two_point([0.5, 2.0]).ess_sup(), 2.0);
    }

    #[test]
    fn expect_uses_infinity_conventions() {
        let x = two_point([0.0, 2.0]);
        let f = |v: f64| if v == 0.0 { ExtendedReal::NegInfinity } else { ExtendedReal::PosInfinity };
        assert_eq!(x.expect(f), ExtendedReal::PosInfinity);
    }

    #[test]
    fn left_quantiles() {
        let f = DiscreteDistribution::new(vec![(1.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(f.quantile(0.5).unwrap(), 1.0);
        assert_eq!(f.quantile(0.75).unwrap(), 3.0);
        assert_eq!(f.quantile(1.0).unwrap(), 3.0);
        assert!(f.quantile(0.0).is_err());
    }

    #[test]
    fn mixtures() {
        let d1 = DiscreteDistribution::dirac(1.0).unwrap();
        let d3 = DiscreteDistribution::dirac(3.0).unwrap();
        assert_eq!(d1.mixture(&d3, 0.5).unwrap().atoms(), &[(1.0, 0.5), (3.0, 0.5)]);
        let f = DiscreteDistribution::new(vec![(0.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(f.mixture(&f, 0.3).unwrap().atoms(), f.atoms());
        let m = f.mixture(&d1, 0.25).unwrap();
        let expected = [(0.0, 0.125), (1.0, 0.75), (2.0, 0.125)];
        for (a, e) in m.atoms().iter().zip(expected) {
            assert_eq!(a.0, e.0);
            assert!((a.1 - e.1).abs() < 1e-15);
        }
        assert!(f.mixture(&d1, 1.0).is_err());
    }

    #[test]
    fn distribution_merges_ties() {
        let x = RandomVariable::uniform(vec![2.0, 1.0, 2.0, 1.0 + 1e-14]).unwrap();
        let d = x.distribution();
        assert_eq!(d.atoms().len(), 2);
        assert_eq!(d.atoms()[1], (2.0, 0.5));
    }

    #[test]
    fn construction_errors() {
        assert!(FiniteProbabilitySpace::new(vec![0.5, 0.0, 0.5]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![0.5, 0.6]).is_err());
        assert!(RandomVariable::uniform(vec![1.0, -1.0]).is_err());
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        assert!(MeasureChange::new(s.clone(), vec![0.5, 1.0]).is_err());
        assert!(MeasureChange::new(s, vec![-0.5, 2.5]).is_err());
    }

    #[test]
    fn comonotone_examples() {
        let x = two_point([1.0, 3.0]);
        let phi = MeasureChange::new(x.space().clone(), vec![0.5, 1.5]).unwrap();
        assert!((comonotone_integral(&x, &phi).unwrap() - 2.5).abs() < 1e-15);
        let flipped = MeasureChange::new(x.space().clone(), vec![1.5, 0.5]).unwrap();
        assert!((comonotone_integral(&x, &flipped).unwrap() - 2.5).abs() < 1e-15);
        let ident = MeasureChange::identity(x.space().clone());
        assert!((comonotone_integral(&x, &ident).unwrap() - x.mean()).abs() < 1e-15);
        let c = RandomVariable::constant(x.space().clone(), 4.0).unwrap();
        assert!((comonotone_integral(&c, &phi).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn comonotone_on_unequal_weights() {
        // hand integral: q_X = 1 on (0, .2], 2 on (.2, 1]; q_φ = .5 on (0, .6], 1.75 on (.6, 1]
        let s = FiniteProbabilitySpace::new(vec![0.2, 0.4, 0.4]).unwrap();
        let x = RandomVariable::new(s.clone(), vec![1.0, 2.0, 2.0]).unwrap();
        let phi = MeasureChange::new(s, vec![0.5, 0.5, 1.75]).unwrap();
        let expected = 0.2 * 0.5 + 0.4 * 2.0 * 0.5 + 0.4 * 2.0 * 1.75;
        assert!((comonotone_integral(&x, &phi).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn csv_modes() {
        let d = DiscreteDistribution::from_csv("value,prob\n0,0.5\n2,0.5\n", DataMode::Distribution).unwrap();
        assert_eq!(d.atoms(), &[(0.0, 0.5), (2.0, 0.5)]);
        let s = DiscreteDistribution::from_csv("3\n1\n# comment\n3\n1\n", DataMode::Sample).unwrap();
        assert_eq!(s.atoms(), &[(1.0, 0.5), (3.0, 0.5)]);
        assert!(DiscreteDistribution::from_csv("0,0.5\n2,0.6\n", DataMode::Distribution).is_err());
        assert!(DiscreteDistribution::from_csv("0,0.5\nx,0.5\n", DataMode::Distribution).is_err());
    }
}
