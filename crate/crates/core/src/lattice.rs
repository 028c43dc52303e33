//! Measures on an arithmetic grid `offset + k·step`, the carrier for FFT powers.

use serde::Serialize;

use crate::budget::ErrorBudget;
use crate::error::{Error, Result};
use crate::measure::{DiscreteDist, MASS_TOL, MERGE_TOL};

/// Largest dense weight vector built when promoting a measure to a lattice.
pub const MAX_LATTICE_LEN: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeDist {
    offset: f64,
    step: f64,
    weights: Vec<f64>,
    budget: ErrorBudget,
}

impl LatticeDist {
    pub fn new(offset: f64, step: f64, weights: Vec<f64>) -> Result<Self> {
        Self::with_budget(offset, step, weights, ErrorBudget::ZERO)
    }

    pub fn with_budget(
        offset: f64,
        step: f64,
        weights: Vec<f64>,
        budget: ErrorBudget,
    ) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::param("offset", "must be finite"));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", format!("must be positive, got {step}")));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid lattice weight {w}")));
        }
        let budget = budget.check()?;
        let dist = Self::from_raw(offset, step, weights, budget);
        if dist.weights.is_empty() {
            return Err(Error::InvalidDistribution("lattice weights are all zero".into()));
        }
        let total = dist.total_mass();
        if (total - 1.0).abs() > budget.total() + MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "lattice weights sum to {total}, expected 1"
            )));
        }
        Ok(dist)
    }

    /// Trims zero weights at both ends and moves the offset accordingly.
    pub(crate) fn from_raw(
        offset: f64,
        step: f64,
        mut weights: Vec<f64>,
        budget: ErrorBudget,
    ) -> Self {
        let last = weights.iter().rposition(|&w| w > 0.0).map_or(0, |i| i + 1);
        weights.truncate(last);
        let first = weights.iter().position(|&w| w > 0.0).unwrap_or(0);
        weights.drain(..first);
        LatticeDist {
            offset: offset + first as f64 * step,
            step,
            weights,
            budget,
        }
    }

    pub fn point(a: f64, step: f64) -> Self {
        LatticeDist {
            offset: a,
            step,
            weights: vec![1.0],
            budget: ErrorBudget::ZERO,
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn budget(&self) -> ErrorBudget {
        self.budget
    }

    pub fn error_budget(&self) -> f64 {
        self.budget.total()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, k: usize) -> f64 {
        self.offset + k as f64 * self.step
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// Zeroes every weight below `eps`, charges it to the budget and trims.
    pub fn prune(self, eps: f64) -> LatticeDist {
        if eps <= 0.0 {
            return self;
        }
        let LatticeDist {
            offset,
            step,
            mut weights,
            mut budget,
        } = self;
        let mut dropped = 0.0;
        for w in weights.iter_mut().filter(|w| **w < eps) {
            dropped += *w;
            *w = 0.0;
        }
        budget.pruned_mass += dropped;
        LatticeDist::from_raw(offset, step, weights, budget)
    }

    pub fn to_discrete(&self) -> DiscreteDist {
        let atoms = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| (self.position(k), w))
            .collect();
        DiscreteDist::from_sorted(atoms, self.budget)
    }
}

/// Places every atom of `f` on the grid `x₀ + k·step`, `x₀` the leftmost atom.
pub fn to_lattice(f: &DiscreteDist, step: f64, snap_tol: f64) -> Result<LatticeDist> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    let offset = f.atoms()[0].0;
    let last = f.atoms()[f.len() - 1].0;
    let cells = ((last - offset) / step).round();
    if cells >= MAX_LATTICE_LEN as f64 {
        return Err(Error::SupportExplosion {
            atoms: cells as usize,
            cap: MAX_LATTICE_LEN,
        });
    }
    let mut weights = vec![0.0; cells as usize + 1];
    for &(x, m) in f.atoms() {
        let k = ((x - offset) / step).round();
        if (x - offset - k * step).abs() > snap_tol || k < 0.0 || k > cells {
            return Err(Error::NotLatticeAligned {
                position: x,
                step,
                tolerance: snap_tol,
            });
        }
        weights[k as usize] += m;
    }
    Ok(LatticeDist::from_raw(offset, step, weights, f.budget()))
}

/// Finds the coarsest grid step carrying every atom of `f`, if a reasonable
/// one exists. A point mass gets step 1.
pub fn infer_step(f: &DiscreteDist) -> Option<f64> {
    let atoms = f.atoms();
    let origin = atoms[0].0;
    if atoms.len() == 1 {
        return Some(1.0);
    }
    let span = atoms[atoms.len() - 1].0 - origin;
    let tol = MERGE_TOL * span.abs().max(1.0);
    let mut step = atoms[1].0 - origin;
    for &(x, _) in &atoms[2..] {
        step = float_gcd(step, x - origin, tol);
        if step <= tol {
            return None;
        }
    }
    if span / step > MAX_LATTICE_LEN as f64 / 4.0 {
        return None;
    }
    let aligned = atoms.iter().all(|&(x, _)| {
        let k = ((x - origin) / step).round();
        (x - origin - k * step).abs() <= MERGE_TOL
    });
    aligned.then_some(step)
}

/// Promotes `f` to a lattice when [`infer_step`] finds one.
pub fn try_lattice(f: &DiscreteDist) -> Option<LatticeDist> {
    let step = infer_step(f)?;
    to_lattice(f, step, MERGE_TOL).ok()
}

fn float_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.abs().max(b.abs()), a.abs().min(b.abs()));
    while b > tol {
        let mut r = a % b;
        if r > b - tol {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn to_lattice_examples() {
        let f = DiscreteDist::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let l = to_lattice(&f, 1.0, 1e-9).unwrap();
        assert_eq!((l.offset(), l.step()), (0.0, 1.0));
        assert_eq!(l.weights(), &[0.5, 0.5]);

        let l = to_lattice(&DiscreteDist::point(0.5), 1.0, 1e-9).unwrap();
        assert_eq!(l.offset(), 0.5);
        assert_eq!(l.weights(), &[1.0]);

        let f = DiscreteDist::new(vec![(0.0, 0.5), (0.5, 0.5)]).unwrap();
        assert!(matches!(
            to_lattice(&f, 1.0, 1e-9),
            Err(Error::NotLatticeAligned { position, .. }) if position == 0.5
        ));
    }

    #[test]
    fn lattice_validation() {
        assert!(LatticeDist::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(LatticeDist::new(0.0, 1.0, vec![0.5, 0.4]).is_err());
        assert!(LatticeDist::new(0.0, 1.0, vec![0.0, 0.0]).is_err());
        let l = LatticeDist::new(-2.0, 0.5, vec![0.0, 0.25, 0.0, 0.75, 0.0]).unwrap();
        assert_eq!(l.offset(), -1.5);
        assert_eq!(l.weights(), &[0.25, 0.0, 0.75]);
        assert_eq!(l.to_discrete().atoms(), &[(-1.5, 0.25), (-0.5, 0.75)]);
    }

    #[test]
    fn infer_step_finds_gcd() {
        let f = DiscreteDist::new(vec![(-3.0, 0.2), (1.5, 0.3), (6.0, 0.5)]).unwrap();
        assert_eq!(infer_step(&f), Some(4.5));
        let f = DiscreteDist::new(vec![(0.1, 0.2), (0.4, 0.3), (0.6, 0.5)]).unwrap();
        let step = infer_step(&f).unwrap();
        assert!((step - 0.1).abs() < 1e-9);
        let f = DiscreteDist::new(vec![(0.0, 0.5), (1.0, 0.25), (std::f64::consts::PI, 0.25)])
            .unwrap();
        assert_eq!(infer_step(&f), None);
    }

    #[test]
    fn prune_trims_and_charges() {
        let l = LatticeDist::new(0.0, 1.0, vec![1e-20, 0.5, 1e-18, 0.5 - 1e-20 - 1e-18, 1e-19])
            .unwrap();
        let p = l.prune(1e-16);
        assert_eq!(p.offset(), 1.0);
        assert_eq!(p.len(), 3);
        assert_eq!(p.weights()[1], 0.0);
        assert!((p.budget().pruned_mass - (1e-20 + 1e-18 + 1e-19)).abs() < 1e-30);
    }
}
