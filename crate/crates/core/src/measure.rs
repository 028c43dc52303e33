//! Finitely supported probability measures on the real line and the moment
//! functionals used by the concentration bounds.

use serde::Serialize;

use crate::budget::ErrorBudget;
use crate::error::{Error, Result};

/// Atoms closer than this are merged into one.
pub const MERGE_TOL: f64 = 1e-9;

/// Largest |E X| accepted where a centered law is required.
pub const CENTER_TOL: f64 = 1e-10;

/// Slack on total mass beyond the certified error budget.
pub const MASS_TOL: f64 = 1e-12;

/// A finitely supported measure stored as atoms sorted by position.
///
/// Positions are strictly increasing and every mass is positive. The total
/// mass equals one up to `budget.total()` (mass removed by pruning) plus
/// round-off.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDist {
    atoms: Vec<(f64, f64)>,
    budget: ErrorBudget,
}

impl DiscreteDist {
    /// Builds a probability measure from `(position, mass)` pairs in any order.
    ///
    /// Zero masses are dropped and atoms within [`MERGE_TOL`] are merged.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_budget(atoms, ErrorBudget::ZERO)
    }

    pub fn with_budget(atoms: Vec<(f64, f64)>, budget: ErrorBudget) -> Result<Self> {
        for &(x, m) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom position {x} is not finite"
                )));
            }
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "atom at {x} has invalid mass {m}"
                )));
            }
        }
        let budget = budget.check()?;
        let dist = DiscreteDist {
            atoms: merge_sorted(sort_atoms(atoms)),
            budget,
        };
        dist.validate_mass()?;
        Ok(dist)
    }

    /// Skips the total-mass check; used on results of exact operations on
    /// already validated measures.
    pub(crate) fn from_parts(atoms: Vec<(f64, f64)>, budget: ErrorBudget) -> Self {
        DiscreteDist {
            atoms: merge_sorted(sort_atoms(atoms)),
            budget,
        }
    }

    /// Caller guarantees atoms are sorted, merged and positive.
    pub(crate) fn from_sorted(atoms: Vec<(f64, f64)>, budget: ErrorBudget) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
        DiscreteDist { atoms, budget }
    }

    fn validate_mass(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms with positive mass".into()));
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > self.budget.total() + MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Point mass at `a`.
    pub fn point(a: f64) -> Self {
        DiscreteDist {
            atoms: vec![(a, 1.0)],
            budget: ErrorBudget::ZERO,
        }
    }

    /// `½δ₋ₐ + ½δₐ`.
    pub fn two_point(a: f64) -> Result<Self> {
        Self::new(vec![(-a, 0.5), (a, 0.5)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn budget(&self) -> ErrorBudget {
        self.budget
    }

    pub fn error_budget(&self) -> f64 {
        self.budget.total()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn max_atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).fold(0.0, f64::max)
    }

    pub fn max_abs_position(&self) -> f64 {
        self.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max)
    }

    pub fn is_point_mass(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Mass of the atom at `x`, within [`MERGE_TOL`].
    pub fn mass_at(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.0 < x - MERGE_TOL);
        match self.atoms.get(i) {
            Some(&(y, m)) if (y - x).abs() <= MERGE_TOL => m,
            _ => 0.0,
        }
    }

    /// Law of `-ξ`.
    pub fn reflect(&self) -> DiscreteDist {
        let atoms = self.atoms.iter().rev().map(|&(x, m)| (-x, m)).collect();
        DiscreteDist {
            atoms,
            budget: self.budget,
        }
    }

    /// Law of `ξ - ξ'` for independent copies, i.e. `F * F̄`.
    ///
    /// The result is made exactly symmetric: the mass at `x` and at `-x` are
    /// averaged, so round-off in the pairwise sums cannot break the symmetry.
    pub fn symmetrize(&self) -> Result<DiscreteDist> {
        let raw = crate::convolution::convolve(self, &self.reflect())?;
        let atoms = raw.atoms();
        let k = atoms.len();
        let paired = (0..k).all(|i| (atoms[i].0 + atoms[k - 1 - i].0).abs() <= 10.0 * MERGE_TOL);
        if !paired {
            // merge clusters came out asymmetric
            return Ok(raw);
        }
        let out = (0..k)
            .map(|i| {
                let (x, m) = atoms[i];
                let (y, mirror) = atoms[k - 1 - i];
                let pos = if 2 * i + 1 == k { 0.0 } else { 0.5 * (x - y) };
                (pos, 0.5 * (m + mirror))
            })
            .collect();
        Ok(DiscreteDist::from_sorted(out, raw.budget()))
    }

    /// Raw moments `(E X, E X²)`.
    pub fn moments(&self) -> (f64, f64) {
        self.atoms.iter().fold((0.0, 0.0), |(m1, m2), &(x, m)| {
            (m1 + m * x, m2 + m * x * x)
        })
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        let (m1, m2) = self.moments();
        (m2 - m1 * m1).max(0.0)
    }

    /// `E|X|³`.
    pub fn third_abs_moment(&self) -> f64 {
        self.atoms.iter().map(|&(x, m)| m * x.abs().powi(3)).sum()
    }

    /// Returns `σ² = E X²` after checking the law is centered and nondegenerate.
    pub fn centered_variance(&self) -> Result<f64> {
        let (mean, second) = self.moments();
        if mean.abs() > CENTER_TOL {
            return Err(Error::NonCenteredInput { mean });
        }
        if second <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(second)
    }

    /// `κ_n = E X² min{|X|, σ√n}` for a centered law.
    pub fn kappa(&self, n: u64) -> Result<f64> {
        let sigma2 = self.centered_variance()?;
        Ok(truncated_third_moment(self, sigma2.sqrt() * (n as f64).sqrt()))
    }

    /// `D(F, b) = ∫ min{x²/b², 1} F(dx)`.
    pub fn d_functional(&self, b: f64) -> Result<f64> {
        self.capped_second_moment(b, 1.0)
    }

    /// `∫ min{x²/b², cap} F(dx)`; `cap = 1` is the D-functional.
    pub fn capped_second_moment(&self, b: f64, cap: f64) -> Result<f64> {
        if !(b > 0.0) {
            return Err(Error::NonPositiveScale(b));
        }
        let b2 = b * b;
        Ok(self
            .atoms
            .iter()
            .map(|&(x, m)| m * (x * x / b2).min(cap))
            .sum())
    }

    /// `B = σ√n` and `β = n E ξ² min{|ξ|, B}` for the sum of `n` copies.
    pub fn beta_b(&self, n: u64) -> Result<MomentSummary> {
        if n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        let sigma2 = self.centered_variance()?;
        let big_b = sigma2.sqrt() * (n as f64).sqrt();
        let kappa_n = truncated_third_moment(self, big_b);
        Ok(MomentSummary {
            sigma2,
            kappa_n,
            beta: n as f64 * kappa_n,
            big_b,
            n,
        })
    }

    /// `|F̂(t)|`, from separate cosine and sine sums.
    pub fn charfn_modulus(&self, t: f64) -> f64 {
        let (c, s) = self
            .atoms
            .iter()
            .fold((0.0, 0.0), |(c, s), &(x, m)| {
                let (sin, cos) = (t * x).sin_cos();
                (c + m * cos, s + m * sin)
            });
        c.hypot(s)
    }

    /// Drops atoms lighter than `eps`, charging their mass to the budget.
    pub fn prune(self, eps: f64) -> DiscreteDist {
        if eps <= 0.0 {
            return self;
        }
        let mut dropped = 0.0;
        let mut budget = self.budget;
        let atoms = self
            .atoms
            .into_iter()
            .filter(|&(_, m)| {
                if m < eps {
                    dropped += m;
                    false
                } else {
                    true
                }
            })
            .collect();
        budget.pruned_mass += dropped;
        DiscreteDist { atoms, budget }
    }

    /// Shifts every atom by `a`.
    pub fn shift(&self, a: f64) -> DiscreteDist {
        DiscreteDist {
            atoms: self.atoms.iter().map(|&(x, m)| (x + a, m)).collect(),
            budget: self.budget,
        }
    }

    /// Total-variation distance `½ Σ |f - g|` after aligning atoms.
    pub fn total_variation(&self, other: &DiscreteDist) -> f64 {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&(x, m)), Some(&(y, w))) if (x - y).abs() <= MERGE_TOL => {
                    acc += (m - w).abs();
                    i += 1;
                    j += 1;
                }
                (Some(&(x, m)), Some(&(y, _))) if x < y => {
                    acc += m;
                    i += 1;
                }
                (Some(_), Some(&(_, w))) => {
                    acc += w;
                    j += 1;
                }
                (Some(&(_, m)), None) => {
                    acc += m;
                    i += 1;
                }
                (None, Some(&(_, w))) => {
                    acc += w;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        0.5 * acc
    }
}

fn truncated_third_moment(f: &DiscreteDist, cap: f64) -> f64 {
    f.atoms
        .iter()
        .map(|&(x, m)| m * x * x * x.abs().min(cap))
        .sum()
}

fn sort_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|a| a.1 > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// Merges runs of atoms within [`MERGE_TOL`] of the run's first position.
pub(crate) fn merge_sorted(atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    let mut anchor = f64::NEG_INFINITY;
    for (x, m) in atoms {
        match out.last_mut() {
            Some(last) if x - anchor <= MERGE_TOL => last.1 += m,
            _ => {
                anchor = x;
                out.push((x, m));
            }
        }
    }
    out
}

/// `F = (1 - p) U + p V` with `U` centered and nondegenerate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSpec {
    p: f64,
    u: DiscreteDist,
    v: DiscreteDist,
    sigma2: f64,
}

impl MixtureSpec {
    pub fn new(p: f64, u: DiscreteDist, v: DiscreteDist) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::param("p", format!("must lie in [0, 1), got {p}")));
        }
        let sigma2 = u.centered_variance()?;
        Ok(MixtureSpec { p, u, v, sigma2 })
    }

    /// `F = U`, with `V = δ₀` as a placeholder.
    pub fn pure(u: DiscreteDist) -> Result<Self> {
        Self::new(0.0, u, DiscreteDist::point(0.0))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn u(&self) -> &DiscreteDist {
        &self.u
    }

    pub fn v(&self) -> &DiscreteDist {
        &self.v
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// The mixed law `F`. With `p = 0` this is `U` itself.
    pub fn mixed(&self) -> DiscreteDist {
        if self.p == 0.0 {
            return self.u.clone();
        }
        let q = 1.0 - self.p;
        let atoms = self
            .u
            .atoms()
            .iter()
            .map(|&(x, m)| (x, q * m))
            .chain(self.v.atoms().iter().map(|&(x, m)| (x, self.p * m)))
            .collect();
        let budget = self.u.budget().scaled(q) + self.v.budget().scaled(self.p);
        DiscreteDist::from_parts(atoms, budget)
    }

    pub fn moment_summary(&self, n: u64) -> Result<MomentSummary> {
        self.u.beta_b(n)
    }
}

/// Moment functionals of a centered law `U` for sums of `n` copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub sigma2: f64,
    pub kappa_n: f64,
    pub beta: f64,
    /// `B = σ√n`.
    pub big_b: f64,
    pub n: u64,
}

impl MomentSummary {
    /// The smallest admissible window, `κ_n / σ²`.
    pub fn min_scale(&self) -> f64 {
        self.kappa_n / self.sigma2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coin() -> DiscreteDist {
        DiscreteDist::two_point(1.0).unwrap()
    }

    pub(crate) fn arb_dist(max_atoms: usize) -> impl Strategy<Value = DiscreteDist> {
        prop::collection::vec((-20i32..20, 1u32..100), 1..=max_atoms).prop_map(|raw| {
            let total: u32 = raw.iter().map(|r| r.1).sum();
            let atoms = raw
                .into_iter()
                .map(|(x, w)| (x as f64 * 0.25, w as f64 / total as f64))
                .collect();
            DiscreteDist::new(atoms).unwrap()
        })
    }

    fn arb_centered() -> impl Strategy<Value = DiscreteDist> {
        arb_dist(6)
            .prop_filter("nondegenerate", |d| d.variance() > 1e-6)
            .prop_map(|d| {
                let m = d.mean();
                d.shift(-m)
            })
    }

    #[test]
    fn construction_merges_and_sorts() {
        let d = DiscreteDist::new(vec![(1.0, 0.25), (-1.0, 0.5), (1.0 + 1e-12, 0.25)]).unwrap();
        assert_eq!(d.atoms(), &[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(DiscreteDist::new(vec![(0.0, 0.7)]).is_err());
        assert!(DiscreteDist::new(vec![(0.0, -0.5), (1.0, 1.5)]).is_err());
        assert!(DiscreteDist::new(vec![]).is_err());
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(DiscreteDist::point(0.0).reflect(), DiscreteDist::point(0.0));
        let f = DiscreteDist::new(vec![(-1.0, 0.3), (2.0, 0.7)]).unwrap();
        assert_eq!(f.reflect().atoms(), &[(-2.0, 0.7), (1.0, 0.3)]);
    }

    #[test]
    fn symmetrize_examples() {
        let s = DiscreteDist::point(3.7).symmetrize().unwrap();
        assert_eq!(s.atoms(), &[(0.0, 1.0)]);
        let s = coin().symmetrize().unwrap();
        assert_eq!(s.atoms(), &[(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
    }

    #[test]
    fn moments_examples() {
        let d = DiscreteDist::point(5.0);
        assert_eq!(d.moments(), (5.0, 25.0));
        assert_eq!(d.variance(), 0.0);
        assert_eq!(coin().moments(), (0.0, 1.0));
        assert_eq!(DiscreteDist::two_point(2.0).unwrap().moments(), (0.0, 4.0));
    }

    #[test]
    fn kappa_examples() {
        for n in [1, 2, 10, 1000] {
            assert_eq!(coin().kappa(n).unwrap(), 1.0);
        }
        assert_eq!(DiscreteDist::two_point(2.0).unwrap().kappa(1).unwrap(), 8.0);
        assert_eq!(DiscreteDist::point(0.0).kappa(1), Err(Error::ZeroVariance));
        assert!(matches!(
            DiscreteDist::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap().kappa(1),
            Err(Error::NonCenteredInput { .. })
        ));
    }

    #[test]
    fn d_functional_examples() {
        assert_eq!(DiscreteDist::point(0.0).d_functional(3.0).unwrap(), 0.0);
        assert_eq!(coin().d_functional(2.0).unwrap(), 0.25);
        assert_eq!(DiscreteDist::two_point(10.0).unwrap().d_functional(1.0).unwrap(), 1.0);
        assert_eq!(coin().d_functional(0.0), Err(Error::NonPositiveScale(0.0)));
        assert_eq!(coin().d_functional(-1.0), Err(Error::NonPositiveScale(-1.0)));
    }

    #[test]
    fn beta_b_examples() {
        let s = coin().beta_b(4).unwrap();
        assert_eq!(s.big_b, 2.0);
        assert_eq!(s.beta, 4.0);
        assert_eq!(DiscreteDist::point(0.0).beta_b(4), Err(Error::ZeroVariance));
    }

    #[test]
    fn charfn_examples() {
        let f = DiscreteDist::new(vec![(-1.3, 0.2), (0.4, 0.5), (2.0, 0.3)]).unwrap();
        assert!((f.charfn_modulus(0.0) - 1.0).abs() < 1e-15);
        assert!((DiscreteDist::point(2.5).charfn_modulus(1.7) - 1.0).abs() < 1e-15);
        assert!(coin().charfn_modulus(std::f64::consts::FRAC_PI_2) < 1e-15);
    }

    #[test]
    fn mixture_spec_checks() {
        let v = DiscreteDist::point(3.0);
        assert!(MixtureSpec::new(1.0, coin(), v.clone()).is_err());
        assert!(MixtureSpec::new(-0.1, coin(), v.clone()).is_err());
        assert!(matches!(
            MixtureSpec::new(0.5, v.clone(), coin()),
            Err(Error::NonCenteredInput { .. })
        ));
        let spec = MixtureSpec::new(0.5, coin(), v).unwrap();
        let f = spec.mixed();
        assert_eq!(f.atoms(), &[(-1.0, 0.25), (1.0, 0.25), (3.0, 0.5)]);
        assert_eq!(MixtureSpec::pure(coin()).unwrap().mixed(), coin());
    }

    #[test]
    fn prune_charges_budget() {
        let d = DiscreteDist::new(vec![(0.0, 1e-20), (1.0, 1.0 - 1e-20)]).unwrap();
        let p = d.prune(1e-16);
        assert_eq!(p.len(), 1);
        assert_eq!(p.budget().pruned_mass, 1e-20);
    }

    proptest! {
        #[test]
        fn reflect_is_involution(f in arb_dist(8)) {
            prop_assert_eq!(f.reflect().reflect(), f);
        }

        #[test]
        fn symmetrize_is_symmetric(f in arb_dist(6)) {
            let s = f.symmetrize().unwrap();
            let r = s.reflect();
            prop_assert_eq!(s.atoms(), r.atoms());
        }

        #[test]
        fn symmetrize_squares_modulus(f in arb_dist(6), t in -5.0f64..5.0) {
            let lhs = f.symmetrize().unwrap().charfn_modulus(t);
            let rhs = f.charfn_modulus(t).powi(2);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn kappa_nondecreasing(u in arb_centered(), n in 1u64..200) {
            prop_assert!(u.kappa(n).unwrap() <= u.kappa(n + 1).unwrap());
        }

        #[test]
        fn kappa_lower_bound(u in arb_centered(), n in 1u64..50) {
            let s2 = u.centered_variance().unwrap();
            let floor = s2.powf(1.5) / std::f64::consts::SQRT_2;
            prop_assert!(u.kappa(1).unwrap() >= floor * (1.0 - 1e-12));
            prop_assert!(u.kappa(n).unwrap() / s2 >= s2.sqrt() / std::f64::consts::SQRT_2 * (1.0 - 1e-12));
        }

        #[test]
        fn beta_over_b2_matches_kappa(u in arb_centered(), n in 1u64..100) {
            let s = u.beta_b(n).unwrap();
            let lhs = s.beta / (s.big_b * s.big_b);
            let rhs = u.kappa(n).unwrap() / s.sigma2;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn d_functional_monotone(f in arb_dist(6), b in 0.01f64..10.0, db in 0.0f64..5.0) {
            let d1 = f.d_functional(b).unwrap();
            let d2 = f.d_functional(b + db).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d1));
            prop_assert!(d2 <= d1 + 1e-15);
        }
    }
}
