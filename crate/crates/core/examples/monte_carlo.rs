//! Monte-Carlo estimate of Q next to the exact value.

use concbound::{conv_power, q_exact, q_monte_carlo, to_lattice, DiscreteDist};
use rand::Rng;

fn main() -> concbound::Result<()> {
    let steps = 200;
    let coin = DiscreteDist::two_point(1.0)?;
    let exact = q_exact(&conv_power(&to_lattice(&coin, 2.0, 1e-9)?, steps, 0.0)?, 3.0).value;
    let walk = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        (0..steps).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).sum()
    };
    for samples in [1_000, 10_000, 100_000] {
        let mc = q_monte_carlo(walk, 3.0, samples, 7)?;
        println!("N = {samples:>6}: {:.4} ± {:.4} (exact {exact:.4})", mc.estimate, mc.ci_halfwidth);
    }
    Ok(())
}
