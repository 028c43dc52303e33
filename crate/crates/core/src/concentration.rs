//! The concentration function `Q(F, b) = sup_x F([x, x + b])`.
//!
//! Windows are closed: an atom exactly `b` to the right of the left edge is
//! counted. Positions are compared with [`MERGE_TOL`] slack so atoms produced
//! by floating-point sums land in the window they belong to.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeDist;
use crate::measure::{DiscreteDist, MERGE_TOL};

/// Confidence level of the Monte-Carlo band.
pub const MC_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QResult {
    pub value: f64,
    /// Total-variation budget of the carrier; the true value lies within
    /// `value ± certified_error`.
    pub certified_error: f64,
    /// Left endpoint of a maximizing window. Always an atom position.
    pub argmax_x: f64,
}

/// Carriers whose concentration function can be computed exactly.
pub trait Concentration {
    fn concentration(&self, b: f64) -> QResult;
}

/// `Q(F, b)`. Panics if `b` is negative or NaN.
pub fn q_exact<M: Concentration + ?Sized>(f: &M, b: f64) -> QResult {
    assert!(b >= 0.0, "window length must be nonnegative, got {b}");
    f.concentration(b)
}

/// `Q(F, b)` for each `b`, evaluated in parallel, in input order.
pub fn q_curve<M: Concentration + Sync + ?Sized>(f: &M, bs: &[f64]) -> Vec<QResult> {
    bs.par_iter().map(|&b| q_exact(f, b)).collect()
}

impl Concentration for DiscreteDist {
    fn concentration(&self, b: f64) -> QResult {
        let atoms = self.atoms();
        let mut prefix = Vec::with_capacity(atoms.len() + 1);
        prefix.push(0.0);
        let mut running = 0.0;
        for &(_, m) in atoms {
            running += m;
            prefix.push(running);
        }
        let mut best = (f64::NEG_INFINITY, atoms[0].0);
        let mut end = 0;
        for (i, &(x, _)) in atoms.iter().enumerate() {
            let reach = x + b + MERGE_TOL;
            end = end.max(i);
            while end < atoms.len() && atoms[end].0 <= reach {
                end += 1;
            }
            let mass = window_mass(&prefix, i, end, |j| atoms[j].1);
            if mass > best.0 {
                best = (mass, x);
            }
        }
        QResult {
            value: best.0,
            certified_error: self.error_budget(),
            argmax_x: best.1,
        }
    }
}

/// Windows this short are summed directly, so a window holding one atom
/// reports that atom's mass exactly.
const DIRECT_WINDOW: usize = 32;

fn window_mass(prefix: &[f64], start: usize, end: usize, mass: impl Fn(usize) -> f64) -> f64 {
    if end - start <= DIRECT_WINDOW {
        (start..end).map(mass).sum()
    } else {
        prefix[end] - prefix[start]
    }
}

impl Concentration for LatticeDist {
    fn concentration(&self, b: f64) -> QResult {
        let w = self.weights();
        let span = ((b + MERGE_TOL) / self.step()).floor();
        let span = if span >= w.len() as f64 { w.len() } else { span as usize };
        let mut prefix = Vec::with_capacity(w.len() + 1);
        prefix.push(0.0);
        let mut running = 0.0;
        for &x in w {
            running += x;
            prefix.push(running);
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for k in (0..w.len()).filter(|&k| w[k] > 0.0) {
            let end = (k + span + 1).min(w.len());
            let mass = window_mass(&prefix, k, end, |j| w[j]);
            if mass > best.0 {
                best = (mass, k);
            }
        }
        QResult {
            value: best.0,
            certified_error: self.error_budget(),
            argmax_x: self.position(best.1),
        }
    }
}

/// Monte-Carlo estimate of `Q` with a uniform (DKW) confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub ci_halfwidth: f64,
}

/// Half-width `√(ln(2/α) / 2N)` of the DKW band at level `1 - α`.
pub fn dkw_halfwidth(samples: usize) -> f64 {
    ((2.0 / (1.0 - MC_CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

/// Estimates `Q(F, b)` from `samples` draws of `sampler`, seeded for
/// reproducibility.
pub fn q_monte_carlo<S>(mut sampler: S, b: f64, samples: usize, seed: u64) -> Result<McEstimate>
where
    S: FnMut(&mut ChaCha8Rng) -> f64,
{
    if samples < 100 {
        return Err(Error::param("samples", "need at least 100 draws"));
    }
    if !(b >= 0.0) {
        return Err(Error::NonPositiveScale(b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = sampler(&mut rng);
        if !x.is_finite() {
            return Err(Error::InvalidDistribution(format!("sampler returned {x}")));
        }
        draws.push(x);
    }
    draws.sort_by(f64::total_cmp);
    // integer counts, so the estimate is an exact multiple of 1/N
    let mut best = 0;
    let mut end = 0;
    for (i, &x) in draws.iter().enumerate() {
        while end < draws.len() && draws[end] <= x + b + MERGE_TOL {
            end += 1;
        }
        best = best.max(end - i);
    }
    Ok(McEstimate {
        estimate: best as f64 / samples as f64,
        ci_halfwidth: dkw_halfwidth(samples),
    })
}

/// `(Q(F, γ₁), (1 + ⌊γ₁/γ₂⌋) Q(F, γ₂))`; the first never exceeds the second.
pub fn q_regularity_gap(f: &DiscreteDist, g1: f64, g2: f64) -> Result<(f64, f64)> {
    for g in [g1, g2] {
        if !(g > 0.0) {
            return Err(Error::NonPositiveScale(g));
        }
    }
    let lhs = q_exact(f, g1).value;
    let rhs = (1.0 + (g1 / g2).floor()) * q_exact(f, g2).value;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::conv_power;
    use crate::lattice::to_lattice;
    use proptest::prelude::*;
    use rand::Rng;

    fn bernoulli() -> DiscreteDist {
        DiscreteDist::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    fn arb_dist() -> impl Strategy<Value = DiscreteDist> {
        prop::collection::vec((-40i32..40, 1u32..60), 1..10).prop_map(|raw| {
            let total: u32 = raw.iter().map(|r| r.1).sum();
            DiscreteDist::new(
                raw.into_iter()
                    .map(|(x, w)| (x as f64 * 0.25, w as f64 / total as f64))
                    .collect(),
            )
            .unwrap()
        })
    }

    #[test]
    fn point_mass_is_fully_concentrated() {
        for b in [0.0, 0.3, 100.0] {
            assert_eq!(q_exact(&DiscreteDist::point(-2.0), b).value, 1.0);
        }
    }

    #[test]
    fn two_atoms_short_window() {
        let r = q_exact(&bernoulli(), 0.5);
        assert_eq!(r.value, 0.5);
        assert_eq!(r.argmax_x, 0.0);
        assert_eq!(q_exact(&bernoulli(), 1.0).value, 1.0);
    }

    #[test]
    fn fourth_power_at_zero() {
        // 2⁴ outcomes, the most likely sum has C(4,2) = 6 of them
        let oracle = 6.0 / 16.0;
        let f4 = conv_power(&bernoulli(), 4, 0.0).unwrap();
        assert_eq!(q_exact(&f4, 0.0).value, oracle);
        let l4 = conv_power(&to_lattice(&bernoulli(), 1.0, 1e-9).unwrap(), 4, 0.0).unwrap();
        assert!((q_exact(&l4, 0.0).value - oracle).abs() < 1e-15);
    }

    #[test]
    fn ten_uniform_atoms() {
        let f = DiscreteDist::new((0..10).map(|k| (k as f64, 0.1)).collect()).unwrap();
        let r = q_exact(&f, 2.5);
        assert!((r.value - 0.3).abs() < 1e-15);
        assert_eq!(r.argmax_x, 0.0);
        let l = to_lattice(&f, 1.0, 1e-9).unwrap();
        assert!((q_exact(&l, 2.5).value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn lattice_argmax_skips_empty_cells() {
        let l = LatticeDist::new(0.0, 1.0, vec![0.4, 0.0, 0.3, 0.3]).unwrap();
        let r = q_exact(&l, 1.0);
        assert!((r.value - 0.6).abs() < 1e-15);
        assert_eq!(r.argmax_x, 2.0);
    }

    #[test]
    fn regularity_gap_examples() {
        let f = DiscreteDist::new(vec![(-1.0, 0.2), (0.5, 0.5), (3.0, 0.3)]).unwrap();
        let (lhs, rhs) = q_regularity_gap(&f, 1.3, 1.3).unwrap();
        assert_eq!(rhs, 2.0 * lhs);
        let (lhs, rhs) = q_regularity_gap(&bernoulli(), 1.0, 0.5).unwrap();
        assert_eq!((lhs, rhs), (1.0, 1.5));
        assert!(q_regularity_gap(&bernoulli(), 0.0, 1.0).is_err());
    }

    #[test]
    fn monte_carlo_constant_sampler() {
        let r = q_monte_carlo(|_| 3.5, 0.0, 500, 1).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let walk = |rng: &mut ChaCha8Rng| -> f64 {
            (0..20).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).sum()
        };
        let a = q_monte_carlo(walk, 1.0, 2000, 42).unwrap();
        let b = q_monte_carlo(walk, 1.0, 2000, 42).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert!(q_monte_carlo(walk, 1.0, 99, 42).is_err());
    }

    #[test]
    fn monte_carlo_covers_exact_walk() {
        let coin = DiscreteDist::two_point(1.0).unwrap();
        let lattice = to_lattice(&coin, 2.0, 1e-9).unwrap();
        let exact = q_exact(&conv_power(&lattice, 100, 0.0).unwrap(), 1.0).value;
        let walk = |rng: &mut ChaCha8Rng| -> f64 {
            (0..100).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).sum()
        };
        let mc = q_monte_carlo(walk, 1.0, 100_000, 2024).unwrap();
        assert!((mc.estimate - exact).abs() <= mc.ci_halfwidth);
    }

    proptest! {
        #[test]
        fn nondecreasing_in_window(f in arb_dist(), b in 0.0f64..5.0, db in 0.0f64..3.0) {
            let q1 = q_exact(&f, b);
            let q2 = q_exact(&f, b + db);
            prop_assert!(q1.value <= q2.value + 1e-15);
            prop_assert!(q1.value >= f.max_atom_mass() - 1e-15);
            prop_assert!(q1.value + q1.certified_error <= 1.0 + 1e-12);
            prop_assert!(f.mass_at(q1.argmax_x) > 0.0);
        }

        #[test]
        fn zero_window_is_max_atom(f in arb_dist()) {
            prop_assert_eq!(q_exact(&f, 0.0).value, f.max_atom_mass());
        }

        #[test]
        fn lattice_and_dense_agree(f in arb_dist(), b in 0.0f64..6.0) {
            let l = to_lattice(&f, 0.25, 1e-9).unwrap();
            prop_assert!((q_exact(&l, b).value - q_exact(&f, b).value).abs() < 1e-12);
        }

        #[test]
        fn regularity_gap_holds(f in arb_dist(), g1 in 0.01f64..8.0, g2 in 0.01f64..8.0) {
            let (lhs, rhs) = q_regularity_gap(&f, g1, g2).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
