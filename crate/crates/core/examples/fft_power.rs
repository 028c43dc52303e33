//! Large convolution powers on a lattice through the FFT path.

use std::time::Instant;

use concbound::{conv_power, q_exact, LatticeDist};

fn main() -> concbound::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000u64);
    // a skewed law on {0, ..., 9}
    let raw: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
    let total: f64 = raw.iter().sum();
    let base = LatticeDist::new(0.0, 1.0, raw.iter().map(|w| w / total).collect())?;

    let start = Instant::now();
    let power = conv_power(&base, n, 1e-16)?;
    let budget = power.budget();
    println!("F^{n}: {} cells in {:.2?}", power.len(), start.elapsed());
    println!("pruned mass {:.2e}, fft residual {:.2e}", budget.pruned_mass, budget.fft_residual);
    for b in [0.0, 10.0, 100.0] {
        let q = q_exact(&power, b);
        println!("Q(F^n, {b:>5}) = {:.8} ± {:.1e}", q.value, q.certified_error);
    }
    Ok(())
}
