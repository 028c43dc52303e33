//! Self-check suites run by `concbound verify`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{holder_lhs_2_9, BoundRequest, Bounds};
use crate::concentration::{q_exact, q_regularity_gap};
use crate::convolution::{conv_power, convolve, mixture_expand, mixture_sum};
use crate::error::{Error, Result};
use crate::format::parse_family_expr;
use crate::lattice::to_lattice;
use crate::measure::{DiscreteDist, MixtureSpec};
use crate::report::BoundId;

/// Slack allowed on mass comparisons that are exact in real arithmetic.
pub const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Constants,
    Counterexample,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "constants" => Ok(Suite::Constants),
            "counterexample" => Ok(Suite::Counterexample),
            "all" => Ok(Suite::All),
            _ => Err(Error::Parse(format!(
                "unknown suite `{s}` (expected identities, constants, counterexample or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<24} {}", self.name, self.detail)
    }
}

/// Runs `suite` with random cases drawn from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        checks.push(product_regularity(&mut rng, 1000));
        checks.push(window_regularity(&mut rng, 1000));
        checks.push(mixture_identity(&mut rng, 20)?);
        checks.push(holder_grid()?);
        checks.push(kappa_floor(&mut rng, 1000)?);
        checks.push(exponential_tail());
        checks.push(lattice_equality()?);
    }
    if matches!(suite, Suite::Constants | Suite::All) {
        checks.extend(constant_stability()?);
    }
    if matches!(suite, Suite::Counterexample | Suite::All) {
        checks.push(counterexample_decay()?);
        checks.push(counterexample_growth()?);
    }
    Ok(checks)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// Random law with up to `max_atoms` atoms. Half the draws put atoms on a
/// quarter grid, so windows often end exactly on an atom.
pub fn random_dist<R: Rng>(rng: &mut R, max_atoms: usize) -> DiscreteDist {
    let k = rng.gen_range(1..=max_atoms);
    let on_grid = rng.gen::<bool>();
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let atoms = weights
        .into_iter()
        .map(|w| {
            let x = if on_grid {
                rng.gen_range(-16i32..=16) as f64 * 0.25
            } else {
                rng.gen_range(-4.0..4.0)
            };
            (x, w / total)
        })
        .collect();
    DiscreteDist::from_parts(atoms, Default::default())
}

/// Random centered law with positive variance.
pub fn random_centered<R: Rng>(rng: &mut R, max_atoms: usize) -> DiscreteDist {
    loop {
        let d = random_dist(rng, max_atoms.max(2));
        if d.variance() > 1e-3 {
            let m = d.mean();
            return d.shift(-m);
        }
    }
}

fn product_regularity(rng: &mut ChaCha8Rng, cases: usize) -> Check {
    let mut failure = None;
    for i in 0..cases {
        let f = random_dist(rng, 6);
        let h = random_dist(rng, 6);
        let gamma = rng.gen_range(0.0..3.0);
        let fh = convolve(&f, &h).expect("small supports");
        let q = q_exact(&fh, gamma).value;
        let bound = q_exact(&f, gamma).value.min(q_exact(&h, gamma).value);
        if q > bound + MASS_SLACK && failure.is_none() {
            failure = Some(format!("case {i}: Q(FH, {gamma}) = {q} > {bound}"));
        }
    }
    finish("regularity_product", failure, format!("{cases} random (F, H, γ)"))
}

fn window_regularity(rng: &mut ChaCha8Rng, cases: usize) -> Check {
    let mut failure = None;
    for i in 0..cases {
        let f = random_dist(rng, 8);
        let g1 = rng.gen_range(0.01..6.0);
        let g2 = rng.gen_range(0.01..6.0);
        let (lhs, rhs) = q_regularity_gap(&f, g1, g2).expect("positive scales");
        // the weaker (1 + γ₁/γ₂) form follows from the integer-part form
        let trivial = (1.0 + g1 / g2) * q_exact(&f, g2).value;
        if (lhs > rhs + MASS_SLACK || lhs > trivial + MASS_SLACK) && failure.is_none() {
            failure = Some(format!("case {i}: γ₁ = {g1}, γ₂ = {g2}: {lhs} > {rhs}"));
        }
    }
    finish("regularity_window", failure, format!("{cases} random (F, γ₁, γ₂)"))
}

fn mixture_identity(rng: &mut ChaCha8Rng, cases: usize) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for i in 0..cases {
        let u = random_centered(rng, 5);
        let v = random_dist(rng, 5);
        let h = random_dist(rng, 3);
        let p = [0.1, 0.3, 0.7][i % 3];
        let n = rng.gen_range(1..=8);
        let spec = MixtureSpec::new(p, u, v)?;
        let parts = mixture_expand(&spec, &h, n, 0.0)?;
        let direct = convolve(&h, &conv_power(&spec.mixed(), n, 0.0)?)?;
        let tv = mixture_sum(&parts).total_variation(&direct);
        worst = worst.max(tv);
        let b = rng.gen_range(0.1..3.0);
        let averaged: f64 = parts.iter().map(|(w, c)| w * q_exact(c, b).value).sum();
        let q = q_exact(&direct, b).value;
        if (tv > 1e-9 || q > averaged + MASS_SLACK) && failure.is_none() {
            failure = Some(format!("case {i} (n = {n}, p = {p}): TV = {tv:e}, Q = {q} vs {averaged}"));
        }
    }
    Ok(finish(
        "mixture_expansion",
        failure,
        format!("{cases} scenarios, max TV {worst:.2e}"),
    ))
}

fn holder_grid() -> Result<Check> {
    let mut worst = (0.0, 0, 0.0);
    for n in 1..=1000u64 {
        for j in 1..=99 {
            let p = j as f64 / 100.0;
            let (_, normalized) = holder_lhs_2_9(n, p, 0)?;
            if normalized > worst.0 {
                worst = (normalized, n, p);
            }
        }
    }
    let (value, n, p) = worst;
    let failure = (value > 3.0).then(|| format!("normalized {value} > 3 at n = {n}, p = {p}"));
    Ok(finish(
        "holder_step",
        failure,
        format!("max normalized {value:.6} at n = {n}, p = {p}"),
    ))
}

fn kappa_floor(rng: &mut ChaCha8Rng, cases: usize) -> Result<Check> {
    let mut failure = None;
    let mut tightest = f64::INFINITY;
    for i in 0..cases {
        let u = random_centered(rng, 6);
        let sigma2 = u.centered_variance()?;
        let floor = sigma2.powf(1.5) / SQRT_2;
        let kappa = u.kappa(1)?;
        tightest = tightest.min(kappa / floor);
        if kappa < floor * (1.0 - MASS_SLACK) && failure.is_none() {
            failure = Some(format!("case {i}: κ₁ = {kappa} < σ³/√2 = {floor}"));
        }
    }
    Ok(finish(
        "kappa_lower_bound",
        failure,
        format!("{cases} random U, min κ₁/(σ³/√2) = {tightest:.4}"),
    ))
}

fn exponential_tail() -> Check {
    let mut failure = None;
    for n in 1..=1000u64 {
        for j in 1..=99 {
            let p = j as f64 / 100.0;
            let lhs = p.powi(n as i32);
            let rhs = (-(n as f64) * (1.0 - p)).exp();
            if lhs > rhs && failure.is_none() {
                failure = Some(format!("p^n = {lhs} > e^(-n(1-p)) = {rhs} at n = {n}, p = {p}"));
            }
        }
    }
    finish("exponential_tail", failure, "n ≤ 1000, p ∈ {0.01, …, 0.99}".into())
}

/// Law on a lattice of step `2σ√(nα)`: the concentration of its powers is
/// flat for every window shorter than the step.
pub fn lattice_example(n: u64, alpha: f64, a: f64) -> Result<MixtureSpec> {
    let m = n as f64 * alpha;
    // (1-q)δ₀ + (q/2)(δ₋ₐ + δₐ) has σ² = q a², so σ√m = a/2 forces q = 1/(4m)
    let q = 1.0 / (4.0 * m);
    let u = parse_family_expr(&format!("zero_mean_three_point({q}, {a})"))?.to_discrete();
    MixtureSpec::pure(u)
}

fn lattice_equality() -> Result<Check> {
    let (n, alpha) = (64u64, 0.25);
    let spec = lattice_example(n, alpha, 1.0)?;
    let scale = spec.sigma() * (n as f64 * alpha).sqrt();
    let rest = (n as f64 * (1.0 - alpha)).round() as u64;
    let power = conv_power(&to_lattice(spec.u(), 1.0, 1e-9)?, rest, 0.0)?;
    let at_scale = q_exact(&power, scale).value;
    let mut failure = None;
    for b in [0.0, scale / 2.0, scale] {
        let q = q_exact(&power, b).value;
        if q != at_scale && failure.is_none() {
            failure = Some(format!("Q(F^{rest}, {b}) = {q} ≠ {at_scale}"));
        }
    }
    Ok(finish(
        "lattice_equality",
        failure,
        format!("n = {n}, α = {alpha}, step {:.3}, Q = {at_scale:.6}", 2.0 * scale),
    ))
}

/// Fair-coin scenarios used by the constant-stability checks.
pub fn fair_coin_family(bound: BoundId, ns: &[u64]) -> Result<Vec<BoundRequest>> {
    let coin = DiscreteDist::two_point(1.0)?;
    let spec = MixtureSpec::pure(coin.clone())?;
    let delta0 = DiscreteDist::point(0.0);
    ns.iter()
        .map(|&n| {
            Ok(match bound {
                BoundId::Lemma1 => BoundRequest::Lemma1 {
                    w_base: coin.clone(),
                    n,
                    g: delta0.clone(),
                    b: 1.0,
                },
                BoundId::Cor1 => BoundRequest::Cor1 {
                    spec: spec.clone(),
                    h: delta0.clone(),
                    n,
                    b: 1.0,
                },
                BoundId::Mult17 => BoundRequest::Mult17 {
                    spec: spec.clone(),
                    n,
                    alpha: 0.5,
                    b: 1.0,
                },
                BoundId::Esseen111 => BoundRequest::Esseen111 {
                    f: coin.clone(),
                    n,
                    b: 1.0,
                },
                other => {
                    return Err(Error::Parse(format!("no fair-coin family for `{other}`")));
                }
            })
        })
        .collect()
}

pub const STABILITY_NS: [u64; 4] = [16, 64, 256, 1024];

fn constant_stability() -> Result<Vec<Check>> {
    let bounds = Bounds::default();
    let ns: Vec<f64> = STABILITY_NS.iter().map(|&n| n as f64).collect();
    let mut checks = Vec::new();
    for bound in [BoundId::Lemma1, BoundId::Cor1, BoundId::Mult17, BoundId::Esseen111] {
        let cs = fair_coin_family(bound, &STABILITY_NS)?
            .iter()
            .map(|r| r.evaluate(&bounds).map(|rep| rep.implied_c))
            .collect::<Result<Vec<_>>>()?;
        let slope = log_log_slope(&ns, &cs);
        let c_hat = cs.iter().copied().fold(0.0, f64::max);
        let failure = (slope.abs() > 0.1).then(|| format!("slope {slope:.4} outside ±0.1"));
        let name = match bound {
            BoundId::Lemma1 => "stability_lemma1",
            BoundId::Cor1 => "stability_cor1",
            BoundId::Mult17 => "stability_mult_1_7",
            _ => "stability_esseen_1_11",
        };
        checks.push(finish(name, failure, format!("slope {slope:+.4}, ĉ = {c_hat:.6}")));
    }
    Ok(checks)
}

fn counterexample_decay() -> Result<Check> {
    let n = 500u64;
    let f = DiscreteDist::two_point(n as f64)?;
    let lattice = to_lattice(&f, 2.0 * n as f64, 1e-9)?;
    let q = q_exact(&conv_power(&lattice, n, 0.0)?, 1.0).value;
    let scaled = q * (n as f64).sqrt();
    let limit = (2.0 / PI).sqrt();
    let gap = (scaled - limit).abs();
    let failure = (gap > 0.01).then(|| format!("|√n Q − √(2/π)| = {gap} > 0.01"));
    Ok(finish(
        "counterexample_decay",
        failure,
        format!("n = {n}, √n·Q = {scaled:.6}"),
    ))
}

fn counterexample_growth() -> Result<Check> {
    let bounds = Bounds::default();
    let ns: Vec<f64> = STABILITY_NS.iter().map(|&n| n as f64).collect();
    let cs = STABILITY_NS
        .iter()
        .map(|&n| {
            let f = DiscreteDist::two_point(n as f64)?;
            Ok(bounds.sharpened_rhs_1_13(&f, n, 1.0)?.implied_c)
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&ns, &cs);
    let failure = ((slope - 0.5).abs() > 0.1).then(|| format!("slope {slope:.4} outside 0.5 ± 0.1"));
    Ok(finish("counterexample_growth", failure, format!("slope {slope:.4}")))
}

fn finish(name: &'static str, failure: Option<String>, summary: String) -> Check {
    match failure {
        Some(detail) => Check {
            name,
            passed: false,
            detail,
        },
        None => Check {
            name,
            passed: true,
            detail: summary,
        },
    }
}
