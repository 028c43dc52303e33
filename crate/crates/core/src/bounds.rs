//! Evaluators for the concentration bounds with the absolute constant set to
//! one, and empirical estimation of the smallest constant a family needs.
//!
//! Every evaluator computes the left-hand side `Q(·, b)` exactly through
//! convolution powers and the right-hand side in closed form or by exact
//! finite sums, and returns a [`BoundReport`]. Scenarios that violate a
//! bound's hypotheses are still evaluated but flagged.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::binomial::BinomialWeights;
use crate::budget::ErrorBudget;
use crate::concentration::q_exact;
use crate::convolution::{convolve, power_auto, PowerTable};
use crate::error::{Error, Result};
use crate::measure::{DiscreteDist, MixtureSpec};
use crate::quadrature::adaptive_simpson;
use crate::report::{BoundId, BoundReport};

/// Absolute tolerance of the characteristic-function integrals.
pub const CF_QUAD_TOL: f64 = 1e-10;

/// How far `n·α` may sit from an integer.
const SPLIT_TOL: f64 = 1e-9;

/// Bound evaluator; `prune_eps` is passed to every convolution power.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bounds {
    pub prune_eps: f64,
}

struct Ledger {
    budget: ErrorBudget,
}

impl Ledger {
    fn new() -> Self {
        Ledger {
            budget: ErrorBudget::ZERO,
        }
    }

    fn q(&mut self, f: &DiscreteDist, b: f64) -> f64 {
        self.budget += f.budget();
        q_exact(f, b).value
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "must be positive"))
    } else {
        Ok(())
    }
}

fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(b))
    }
}

/// `m = n·α`, required to be an integer strictly between 0 and `n`.
fn split(n: u64, alpha: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let product = n as f64 * alpha;
    let m = product.round();
    if (product - m).abs() > SPLIT_TOL || m < 1.0 || m >= n as f64 {
        return Err(Error::NonIntegerSplit { n, alpha, product });
    }
    Ok(m as u64)
}

/// `min{1, b/(σ√(n-r)) · Q(H, σ√n)} · P(μ < r)`, the tail addend shared by
/// both forms of the binomial-split bound.
fn tail_term(
    ledger: &mut Ledger,
    h: &DiscreteDist,
    sigma: f64,
    n: u64,
    r: u64,
    b: f64,
    weights: &BinomialWeights,
) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let below = weights.cdf_below(r);
    let q = ledger.q(h, sigma * (n as f64).sqrt());
    let inner = if r == n {
        1.0
    } else {
        (b / (sigma * ((n - r) as f64).sqrt()) * q).min(1.0)
    };
    inner * below
}

impl Bounds {
    pub fn new(prune_eps: f64) -> Self {
        Bounds { prune_eps }
    }

    fn power(&self, f: &DiscreteDist, n: u64) -> Result<DiscreteDist> {
        power_auto(f, n, self.prune_eps)
    }

    /// `Q(W^n G, b) ≤ c (b/B) Q(G, B)` for centered `W`, `B = σ√n`,
    /// provided `b ≥ β/B²`.
    pub fn lemma1_rhs(
        &self,
        w_base: &DiscreteDist,
        n: u64,
        g: &DiscreteDist,
        b: f64,
    ) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        let moments = w_base.beta_b(n)?;
        let sigma = moments.sigma2.sqrt();
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&convolve(g, &self.power(w_base, n)?)?, b);
        let scale = sigma * (n as f64).sqrt();
        let rhs = b / (sigma * (n as f64).sqrt()) * ledger.q(g, scale);
        let threshold = moments.beta / (moments.big_b * moments.big_b);
        let mut report = BoundReport::new(BoundId::Lemma1, lhs, rhs)
            .param("n", n as f64)
            .param("b", b)
            .param("sigma", sigma)
            .param("big_b", moments.big_b)
            .param("beta", moments.beta)
            .param("min_b", threshold);
        report.hypothesis_ok = b >= threshold;
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(H F^n, b) ≤ c b/(σ√(n(1-p))) Q(H, σ√n)` when `b ≥ κ_n/σ²`.
    pub fn cor1_rhs(
        &self,
        spec: &MixtureSpec,
        h: &DiscreteDist,
        n: u64,
        b: f64,
    ) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        let moments = spec.moment_summary(n)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&convolve(h, &self.power(&spec.mixed(), n)?)?, b);
        let scale = sigma * (n as f64).sqrt();
        let rhs = b / (sigma * (n as f64 * (1.0 - p)).sqrt()) * ledger.q(h, scale);
        let mut report = BoundReport::new(BoundId::Cor1, lhs, rhs)
            .param("n", n as f64)
            .param("b", b)
            .param("p", p)
            .param("sigma", sigma)
            .param("kappa_n", moments.kappa_n)
            .param("min_b", moments.min_scale());
        report.hypothesis_ok = b >= moments.min_scale();
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c b/(σ√(nα(1-p))) Q(F^{n(1-α)}, σ√(nα))` for integer
    /// `nα` and `b ≥ κ_{nα}/σ²`.
    pub fn mult_rhs_1_7(
        &self,
        spec: &MixtureSpec,
        n: u64,
        alpha: f64,
        b: f64,
    ) -> Result<BoundReport> {
        check_b(b)?;
        let m = split(n, alpha)?;
        let moments = spec.moment_summary(m)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let f = spec.mixed();
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(&f, n)?, b);
        let scale = sigma * (m as f64).sqrt();
        let rest = self.power(&f, n - m)?;
        let rhs = b / (sigma * (m as f64 * (1.0 - p)).sqrt()) * ledger.q(&rest, scale);
        let mut report = BoundReport::new(BoundId::Mult17, lhs, rhs)
            .param("n", n as f64)
            .param("alpha", alpha)
            .param("b", b)
            .param("p", p)
            .param("sigma", sigma)
            .param("split_scale", scale)
            .param("min_b", moments.min_scale());
        report.hypothesis_ok = b >= moments.min_scale();
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// The two-addend binomial-split bound with split point `r`:
    /// `c b/(σ√(n(1-p))) Q(H V^r, σ√n) + min{1, c b/(σ√(n-r)) Q(H, σ√n)} P(μ < r)`.
    pub fn th1_simple_rhs(
        &self,
        spec: &MixtureSpec,
        h: &DiscreteDist,
        n: u64,
        r: u64,
        b: f64,
    ) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        if r > n {
            return Err(Error::BadRange { r, s: n, n });
        }
        let moments = spec.moment_summary(n)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let weights = BinomialWeights::new(n, p)?;
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&convolve(h, &self.power(&spec.mixed(), n)?)?, b);
        let scale = sigma * (n as f64).sqrt();
        let hv = convolve(h, &self.power(spec.v(), r)?)?;
        let main = b / (sigma * (n as f64 * (1.0 - p)).sqrt()) * ledger.q(&hv, scale);
        let tail = tail_term(&mut ledger, h, sigma, n, r, b, &weights);
        let mut report = BoundReport::new(BoundId::Th1Simple, lhs, main + tail)
            .param("n", n as f64)
            .param("r", r as f64)
            .param("b", b)
            .param("p", p)
            .param("sigma", sigma)
            .param("term_main", main)
            .param("term_tail", tail)
            .param("p_mu_below_r", weights.cdf_below(r))
            .param("min_b", moments.min_scale());
        report.hypothesis_ok = b >= moments.min_scale();
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// The three-addend binomial-split bound for `0 ≤ r < s ≤ n`.
    ///
    /// The addends are the binomially weighted `b/(σ√(n-k)) Q(H V^k, σ√(n-k))`
    /// over `r ≤ k < s`, the exact conditional concentrations
    /// `Q(H U^{n-k} V^k, b)` over `k ≥ s`, and the tail term for `μ < r`.
    pub fn th1_general_rhs(
        &self,
        spec: &MixtureSpec,
        h: &DiscreteDist,
        n: u64,
        r: u64,
        s: u64,
        b: f64,
    ) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        if !(r < s && s <= n) {
            return Err(Error::BadRange { r, s, n });
        }
        let moments = spec.moment_summary(n)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let weights = BinomialWeights::new(n, p)?;
        let u_powers = PowerTable::new(spec.u(), n - s, self.prune_eps)?;
        let v_powers = PowerTable::new(spec.v(), n, self.prune_eps)?;
        let pmf = weights.pmf();

        let middle: Vec<(f64, ErrorBudget)> = (r..s)
            .into_par_iter()
            .map(|k| {
                let hv = convolve(h, v_powers.get(k))?;
                let width = sigma * ((n - k) as f64).sqrt();
                let q = q_exact(&hv, width).value;
                Ok((pmf[k as usize] * b / width * q, hv.budget()))
            })
            .collect::<Result<_>>()?;
        let upper: Vec<(f64, ErrorBudget)> = (s..=n)
            .into_par_iter()
            .map(|k| {
                let uv = convolve(u_powers.get(n - k), v_powers.get(k))?;
                let comp = convolve(h, &uv)?;
                Ok((pmf[k as usize] * q_exact(&comp, b).value, comp.budget()))
            })
            .collect::<Result<_>>()?;

        let mut ledger = Ledger::new();
        let mut sum = |terms: &[(f64, ErrorBudget)]| {
            terms.iter().fold(0.0, |acc, (t, budget)| {
                ledger.budget += *budget;
                acc + t
            })
        };
        let term_middle = sum(&middle);
        let term_upper = sum(&upper);
        let tail = tail_term(&mut ledger, h, sigma, n, r, b, &weights);
        let lhs = ledger.q(&convolve(h, &self.power(&spec.mixed(), n)?)?, b);

        let mut report = BoundReport::new(
            BoundId::Th1General,
            lhs,
            term_middle + term_upper + tail,
        )
        .param("n", n as f64)
        .param("r", r as f64)
        .param("s", s as f64)
        .param("b", b)
        .param("p", p)
        .param("sigma", sigma)
        .param("term_middle", term_middle)
        .param("term_upper", term_upper)
        .param("term_tail", tail)
        .param("min_b", moments.min_scale());
        report.hypothesis_ok = b >= moments.min_scale();
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c (n D(F̃, b))^{-1/2}`.
    pub fn esseen_rhs_1_11(&self, f: &DiscreteDist, n: u64, b: f64) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        let sym = f.symmetrize()?;
        let d = sym.d_functional(b)?;
        if d <= 0.0 {
            return Err(Error::DegenerateSymmetrization);
        }
        let rhs = (n as f64 * d).powf(-0.5);
        // written as a capped second moment of F̃ with cap 1
        let rewritten = (n as f64 * sym.capped_second_moment(b, 1.0)?).powf(-0.5);
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(f, n)?, b);
        let mut report = BoundReport::new(BoundId::Esseen111, lhs, rhs)
            .param("n", n as f64)
            .param("b", b)
            .param("d_sym", d)
            .param("rhs_rewritten", rewritten);
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c(F, b) (n ∫ min{x²/b², n} F̃(dx))^{-1/2}`. The implied
    /// constant here depends on `F` and is not expected to stay bounded.
    pub fn sharpened_rhs_1_13(&self, f: &DiscreteDist, n: u64, b: f64) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        let sym = f.symmetrize()?;
        let capped = sym.capped_second_moment(b, n as f64)?;
        if capped <= 0.0 {
            return Err(Error::DegenerateSymmetrization);
        }
        let rhs = (n as f64 * capped).powf(-0.5);
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(f, n)?, b);
        let mut report = BoundReport::new(BoundId::Sharpened113, lhs, rhs)
            .param("n", n as f64)
            .param("b", b)
            .param("capped_moment", capped)
            .param("d_sym", sym.d_functional(b)?);
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c b ∫_{|t| ≤ 1/b} |F̂(t)|^n dt`; `n = 1` is the plain
    /// characteristic-function bound for `F`.
    pub fn cf_bound_1_15(&self, f: &DiscreteDist, n: u64, b: f64) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        let rhs = b * charfn_power_integral(f, n, 1.0 / b)?;
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(f, n)?, b);
        let mut report = BoundReport::new(BoundId::Cf115, lhs, rhs)
            .param("n", n as f64)
            .param("b", b);
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c b/√(1-p) ∫_{|t|σ√(nα) ≤ 1} |F̂(t)|^{n(1-α)} dt`, valid
    /// for integer `nα` and `b ≥ E|X|³/σ²`. The report also carries the
    /// value of the direct bound at the same `(F, n, b)` for comparison.
    pub fn cf_bound_1_16(
        &self,
        spec: &MixtureSpec,
        n: u64,
        alpha: f64,
        b: f64,
    ) -> Result<BoundReport> {
        check_b(b)?;
        let m = split(n, alpha)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let f = spec.mixed();
        let half_window = 1.0 / (sigma * (m as f64).sqrt());
        let integral = charfn_power_integral(&f, n - m, half_window)?;
        let rhs = b / (1.0 - p).sqrt() * integral;
        let direct = b * charfn_power_integral(&f, n, 1.0 / b)?;
        let min_b = spec.u().third_abs_moment() / spec.sigma2();
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(&f, n)?, b);
        let mut report = BoundReport::new(BoundId::Cf116, lhs, rhs)
            .param("n", n as f64)
            .param("alpha", alpha)
            .param("b", b)
            .param("p", p)
            .param("sigma", sigma)
            .param("window", 2.0 * half_window)
            .param("rhs_cf_1_15", direct)
            .param("min_b", min_b);
        report.hypothesis_ok = b >= min_b;
        report.budgets = ledger.budget;
        Ok(report)
    }

    /// `Q(F^n, b) ≤ c b(δ+σ) / (δσn √((1-p) D(F̃, δ√n)))` when `b ≥ κ_n/σ²`.
    pub fn cor2_rhs(&self, spec: &MixtureSpec, n: u64, b: f64, delta: f64) -> Result<BoundReport> {
        check_n(n)?;
        check_b(b)?;
        if !(delta > 0.0) {
            return Err(Error::param("delta", "must be positive"));
        }
        let moments = spec.moment_summary(n)?;
        let sigma = spec.sigma();
        let p = spec.p();
        let f = spec.mixed();
        let d = f.symmetrize()?.d_functional(delta * (n as f64).sqrt())?;
        if d <= 0.0 {
            return Err(Error::DegenerateSymmetrization);
        }
        let rhs = b * (delta + sigma) / (delta * sigma * n as f64 * ((1.0 - p) * d).sqrt());
        let mut ledger = Ledger::new();
        let lhs = ledger.q(&self.power(&f, n)?, b);
        let mut report = BoundReport::new(BoundId::Cor2, lhs, rhs)
            .param("n", n as f64)
            .param("b", b)
            .param("delta", delta)
            .param("p", p)
            .param("sigma", sigma)
            .param("d_sym", d)
            .param("min_b", moments.min_scale());
        report.hypothesis_ok = b >= moments.min_scale();
        report.budgets = ledger.budget;
        Ok(report)
    }
}

/// `∫_{-T}^{T} |F̂(t)|^n dt`, integrated over `[0, T]` and doubled since the
/// modulus is even. Panels are capped at `min(π/T, π/(4 max|x| √n))`.
pub fn charfn_power_integral(f: &DiscreteDist, n: u64, half_window: f64) -> Result<f64> {
    let spread = f.max_abs_position() * (n as f64).sqrt();
    let mut max_panel = PI / half_window;
    if spread > 0.0 {
        max_panel = max_panel.min(PI / (4.0 * spread));
    }
    let exponent = n as f64;
    let integrand = |t: f64| f.charfn_modulus(t).min(1.0).powf(exponent);
    Ok(2.0 * adaptive_simpson(integrand, 0.0, half_window, 0.5 * CF_QUAD_TOL, max_panel)?)
}

/// The weighted sum bounded by Hölder's inequality in the binomial-split bound:
/// `E[(n-μ)^{-1/2}; r ≤ μ < n]` and its normalization by `√(n(1-p))`.
pub fn holder_lhs_2_9(n: u64, p: f64, r: u64) -> Result<(f64, f64)> {
    check_n(n)?;
    if r > n {
        return Err(Error::BadRange { r, s: n, n });
    }
    let weights = BinomialWeights::new(n, p)?;
    let lhs: f64 = (r..n)
        .map(|k| weights.pmf()[k as usize] / ((n - k) as f64).sqrt())
        .sum();
    Ok((lhs, lhs * (n as f64 * (1.0 - p)).sqrt()))
}

/// One bound evaluation with owned inputs, so families of scenarios can be
/// generated, stored and evaluated in parallel.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundRequest {
    Lemma1 { w_base: DiscreteDist, n: u64, g: DiscreteDist, b: f64 },
    Cor1 { spec: MixtureSpec, h: DiscreteDist, n: u64, b: f64 },
    Mult17 { spec: MixtureSpec, n: u64, alpha: f64, b: f64 },
    Th1Simple { spec: MixtureSpec, h: DiscreteDist, n: u64, r: u64, b: f64 },
    Th1General { spec: MixtureSpec, h: DiscreteDist, n: u64, r: u64, s: u64, b: f64 },
    Esseen111 { f: DiscreteDist, n: u64, b: f64 },
    Sharpened113 { f: DiscreteDist, n: u64, b: f64 },
    Cf115 { f: DiscreteDist, n: u64, b: f64 },
    Cf116 { spec: MixtureSpec, n: u64, alpha: f64, b: f64 },
    Cor2 { spec: MixtureSpec, n: u64, b: f64, delta: f64 },
}

impl BoundRequest {
    pub fn id(&self) -> BoundId {
        match self {
            BoundRequest::Lemma1 { .. } => BoundId::Lemma1,
            BoundRequest::Cor1 { .. } => BoundId::Cor1,
            BoundRequest::Mult17 { .. } => BoundId::Mult17,
            BoundRequest::Th1Simple { .. } => BoundId::Th1Simple,
            BoundRequest::Th1General { .. } => BoundId::Th1General,
            BoundRequest::Esseen111 { .. } => BoundId::Esseen111,
            BoundRequest::Sharpened113 { .. } => BoundId::Sharpened113,
            BoundRequest::Cf115 { .. } => BoundId::Cf115,
            BoundRequest::Cf116 { .. } => BoundId::Cf116,
            BoundRequest::Cor2 { .. } => BoundId::Cor2,
        }
    }

    pub fn evaluate(&self, bounds: &Bounds) -> Result<BoundReport> {
        match self {
            BoundRequest::Lemma1 { w_base, n, g, b } => bounds.lemma1_rhs(w_base, *n, g, *b),
            BoundRequest::Cor1 { spec, h, n, b } => bounds.cor1_rhs(spec, h, *n, *b),
            BoundRequest::Mult17 { spec, n, alpha, b } => bounds.mult_rhs_1_7(spec, *n, *alpha, *b),
            BoundRequest::Th1Simple { spec, h, n, r, b } => {
                bounds.th1_simple_rhs(spec, h, *n, *r, *b)
            }
            BoundRequest::Th1General { spec, h, n, r, s, b } => {
                bounds.th1_general_rhs(spec, h, *n, *r, *s, *b)
            }
            BoundRequest::Esseen111 { f, n, b } => bounds.esseen_rhs_1_11(f, *n, *b),
            BoundRequest::Sharpened113 { f, n, b } => bounds.sharpened_rhs_1_13(f, *n, *b),
            BoundRequest::Cf115 { f, n, b } => bounds.cf_bound_1_15(f, *n, *b),
            BoundRequest::Cf116 { spec, n, alpha, b } => bounds.cf_bound_1_16(spec, *n, *alpha, *b),
            BoundRequest::Cor2 { spec, n, b, delta } => bounds.cor2_rhs(spec, *n, *b, *delta),
        }
    }
}

/// Smallest constant that makes a bound hold on every admissible scenario
/// of a family, with the scenario attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub c_hat: f64,
    pub witness: BoundReport,
    pub admissible: usize,
}

/// `ĉ = max implied_c` over the scenarios of `family` that target `bound_id`
/// and satisfy its hypotheses. Ties go to the earliest scenario, so the
/// result does not depend on evaluation order.
pub fn estimate_constant<I>(bounds: &Bounds, family: I, bound_id: BoundId) -> Result<ConstantEstimate>
where
    I: IntoIterator<Item = BoundRequest>,
{
    let requests: Vec<BoundRequest> = family
        .into_iter()
        .filter(|r| r.id() == bound_id)
        .collect();
    let reports = requests
        .par_iter()
        .map(|r| r.evaluate(bounds))
        .collect::<Result<Vec<_>>>()?;
    constant_from_reports(reports)
}

/// The max-reduction of [`estimate_constant`] over already computed reports.
pub fn constant_from_reports(reports: Vec<BoundReport>) -> Result<ConstantEstimate> {
    let admissible: Vec<BoundReport> = reports.into_iter().filter(|r| r.hypothesis_ok).collect();
    let count = admissible.len();
    let witness = admissible
        .into_iter()
        .reduce(|best, r| if r.implied_c > best.implied_c { r } else { best })
        .ok_or(Error::EmptyFamily)?;
    Ok(ConstantEstimate {
        c_hat: witness.implied_c,
        witness,
        admissible: count,
    })
}
