//! Convolutions, convolution powers and the binomial expansion of `H F^n`.

use rayon::prelude::*;

use crate::binomial::BinomialWeights;
use crate::budget::ErrorBudget;
use crate::error::{Error, Result};
use crate::fft::convolve_lattice;
use crate::lattice::{try_lattice, LatticeDist};
use crate::measure::{DiscreteDist, MixtureSpec};

/// Default cap on the number of pairwise sums a dense convolution may form.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 24;

/// A measure carrier closed under convolution.
pub trait Convolution: Sized + Clone {
    /// `δ₀` in the same representation.
    fn unit(&self) -> Self;

    fn convolve_with(&self, other: &Self) -> Result<Self>;

    fn square(&self) -> Result<Self> {
        self.convolve_with(self)
    }

    fn pruned(self, eps: f64) -> Self;

    fn budget(&self) -> ErrorBudget;
}

impl Convolution for DiscreteDist {
    fn unit(&self) -> Self {
        DiscreteDist::point(0.0)
    }

    fn convolve_with(&self, other: &Self) -> Result<Self> {
        convolve(self, other)
    }

    fn pruned(self, eps: f64) -> Self {
        self.prune(eps)
    }

    fn budget(&self) -> ErrorBudget {
        DiscreteDist::budget(self)
    }
}

impl Convolution for LatticeDist {
    fn unit(&self) -> Self {
        LatticeDist::point(0.0, self.step())
    }

    fn convolve_with(&self, other: &Self) -> Result<Self> {
        convolve_lattice(self, other)
    }

    fn pruned(self, eps: f64) -> Self {
        self.prune(eps)
    }

    fn budget(&self) -> ErrorBudget {
        LatticeDist::budget(self)
    }
}

/// `F * G` with the default support cap.
pub fn convolve(f: &DiscreteDist, g: &DiscreteDist) -> Result<DiscreteDist> {
    convolve_capped(f, g, DEFAULT_SUPPORT_CAP)
}

/// `F * G`: atoms at all pairwise sums, merged within the atom tolerance.
pub fn convolve_capped(f: &DiscreteDist, g: &DiscreteDist, cap: usize) -> Result<DiscreteDist> {
    let pairs = f.len().saturating_mul(g.len());
    if pairs > cap {
        return Err(Error::SupportExplosion { atoms: pairs, cap });
    }
    let budget = (f.budget() + g.budget()).check()?;
    if f.is_point_mass() || g.is_point_mass() {
        let (point, other) = if f.is_point_mass() { (f, g) } else { (g, f) };
        let (a, m) = point.atoms()[0];
        let atoms = other.atoms().iter().map(|&(x, w)| (x + a, w * m)).collect();
        return Ok(DiscreteDist::from_parts(atoms, budget));
    }
    let mut atoms = Vec::with_capacity(pairs);
    for &(x, m) in f.atoms() {
        atoms.extend(g.atoms().iter().map(|&(y, w)| (x + y, m * w)));
    }
    Ok(DiscreteDist::from_parts(atoms, budget))
}

/// `F^n` by left-to-right square-and-multiply; `F⁰ = δ₀`.
///
/// Budgets add through each product, so mass dropped from `F^m` is charged
/// again for every later factor, about `n/m` times in all. Atoms of the
/// intermediate power `F^m` are therefore dropped below `prune_eps · m/n`,
/// which keeps every stage's share of the final budget on the scale of
/// `prune_eps`; the last step prunes at `prune_eps` itself.
pub fn conv_power<M: Convolution>(base: &M, n: u64, prune_eps: f64) -> Result<M> {
    if n == 0 {
        return Ok(base.unit());
    }
    if !(prune_eps >= 0.0) {
        return Err(Error::param("prune_eps", "must be nonnegative"));
    }
    let threshold = |m: u64| prune_eps * (m as f64 / n as f64);
    let mut acc = base.clone();
    let mut m = 1u64;
    for bit in (0..63 - n.leading_zeros()).rev() {
        m *= 2;
        acc = acc.square()?.pruned(threshold(m));
        acc.budget().check()?;
        if (n >> bit) & 1 == 1 {
            m += 1;
            acc = acc.convolve_with(base)?.pruned(threshold(m));
            acc.budget().check()?;
        }
    }
    debug_assert_eq!(m, n);
    Ok(acc)
}

/// `F^n` through the FFT lattice path whenever `F` sits on a grid, otherwise
/// through dense convolution.
pub fn power_auto(f: &DiscreteDist, n: u64, prune_eps: f64) -> Result<DiscreteDist> {
    if n <= 1 || f.is_point_mass() {
        return conv_power(f, n, prune_eps);
    }
    match try_lattice(f) {
        Some(lattice) => Ok(conv_power(&lattice, n, prune_eps)?.to_discrete()),
        None => conv_power(f, n, prune_eps),
    }
}

/// `F⁰, F¹, …, F^max` by repeated multiplication.
#[derive(Debug, Clone)]
pub struct PowerTable {
    powers: Vec<DiscreteDist>,
}

impl PowerTable {
    pub fn new(base: &DiscreteDist, max: u64, prune_eps: f64) -> Result<Self> {
        let mut powers = Vec::with_capacity(max as usize + 1);
        powers.push(DiscreteDist::point(0.0));
        for k in 0..max as usize {
            let next = convolve(&powers[k], base)?.prune(prune_eps);
            next.budget().check()?;
            powers.push(next);
        }
        Ok(PowerTable { powers })
    }

    pub fn get(&self, k: u64) -> &DiscreteDist {
        &self.powers[k as usize]
    }

    pub fn max(&self) -> u64 {
        self.powers.len() as u64 - 1
    }
}

/// Prefix tables of `U` and `V` powers for one mixture and one `n`.
#[derive(Debug, Clone)]
pub struct MixtureTables {
    pub weights: BinomialWeights,
    pub u_powers: PowerTable,
    pub v_powers: PowerTable,
}

impl MixtureTables {
    pub fn new(spec: &MixtureSpec, n: u64, prune_eps: f64) -> Result<Self> {
        Ok(MixtureTables {
            weights: BinomialWeights::new(n, spec.p())?,
            u_powers: PowerTable::new(spec.u(), n, prune_eps)?,
            v_powers: PowerTable::new(spec.v(), n, prune_eps)?,
        })
    }

    /// `H U^{n-k} V^k`.
    pub fn component(&self, h: &DiscreteDist, k: u64) -> Result<DiscreteDist> {
        let n = self.weights.n();
        let uv = convolve(self.u_powers.get(n - k), self.v_powers.get(k))?;
        convolve(h, &uv)
    }
}

/// The conditional laws of `H F^n` given the binomial count of `V` draws:
/// `[(P(μ = k), H U^{n-k} V^k)]` for `k = 0..=n`.
pub fn mixture_expand(
    spec: &MixtureSpec,
    h: &DiscreteDist,
    n: u64,
    prune_eps: f64,
) -> Result<Vec<(f64, DiscreteDist)>> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let tables = MixtureTables::new(spec, n, prune_eps)?;
    (0..=n)
        .into_par_iter()
        .map(|k| Ok((tables.weights.pmf()[k as usize], tables.component(h, k)?)))
        .collect()
}

/// `Σ w_k G_k` as a single measure.
pub fn mixture_sum(parts: &[(f64, DiscreteDist)]) -> DiscreteDist {
    let mut budget = ErrorBudget::ZERO;
    let mut atoms = Vec::new();
    for (w, g) in parts {
        budget += g.budget().scaled(*w);
        atoms.extend(g.atoms().iter().map(|&(x, m)| (x, w * m)));
    }
    DiscreteDist::from_parts(atoms, budget)
}
