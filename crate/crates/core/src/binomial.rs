use serde::Serialize;

use crate::error::{Error, Result};

/// Probabilities of a Binomial(n, p) count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialWeights {
    n: u64,
    p: f64,
    pmf: Vec<f64>,
}

impl BinomialWeights {
    /// Builds the pmf by ratio recurrences outward from the mode, then
    /// normalizes. Terms below `f64::MIN_POSITIVE` relative to the mode
    /// underflow to zero.
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::param("p", format!("must lie in [0, 1), got {p}")));
        }
        let len = n as usize + 1;
        let mut pmf = vec![0.0; len];
        if p == 0.0 {
            pmf[0] = 1.0;
            return Ok(BinomialWeights { n, p, pmf });
        }
        let odds = p / (1.0 - p);
        let mode = (((n + 1) as f64 * p).floor() as usize).min(n as usize);
        pmf[mode] = 1.0;
        for k in mode..n as usize {
            pmf[k + 1] = pmf[k] * (n as usize - k) as f64 / (k + 1) as f64 * odds;
        }
        for k in (1..=mode).rev() {
            pmf[k - 1] = pmf[k] * k as f64 / (n as usize - k + 1) as f64 / odds;
        }
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|w| *w /= total);
        Ok(BinomialWeights { n, p, pmf })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `P(μ < r)`.
    pub fn cdf_below(&self, r: u64) -> f64 {
        self.pmf.iter().take(r as usize).sum()
    }
}

pub fn binomial_pmf(n: u64, p: f64) -> Result<BinomialWeights> {
    BinomialWeights::new(n, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_choose(n: u64, k: u64) -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
    }

    #[test]
    fn small_cases() {
        assert_eq!(binomial_pmf(2, 0.5).unwrap().pmf(), &[0.25, 0.5, 0.25]);
        assert_eq!(binomial_pmf(4, 0.0).unwrap().pmf(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(1, 0.3).unwrap().pmf(), &[0.7, 0.3]);
        assert!(binomial_pmf(3, 1.0).is_err());
    }

    #[test]
    fn large_n_normalized() {
        let w = binomial_pmf(1000, 0.3).unwrap();
        let total: f64 = w.pmf().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(w.pmf().iter().all(|&x| x >= 0.0));
        for k in [250u64, 300, 350] {
            let exact = (ln_choose(1000, k) + k as f64 * 0.3f64.ln() + (1000 - k) as f64 * 0.7f64.ln()).exp();
            assert!((w.pmf()[k as usize] - exact).abs() < 1e-12 * exact.max(1e-3));
        }
    }

    #[test]
    fn lower_tail() {
        let w = binomial_pmf(3, 0.5).unwrap();
        assert_eq!(w.cdf_below(0), 0.0);
        assert_eq!(w.cdf_below(2), 0.5);
        assert_eq!(w.cdf_below(4), 1.0);
    }
}
