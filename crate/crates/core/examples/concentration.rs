//! Concentration function of a small law and its convolution powers.

use concbound::{conv_power, q_curve, q_exact, DiscreteDist};

fn main() -> concbound::Result<()> {
    let f = DiscreteDist::new(vec![(-1.0, 0.2), (0.0, 0.5), (2.5, 0.3)])?;
    let bs = [0.0, 0.5, 1.0, 2.5, 4.0];
    for (b, q) in bs.iter().zip(q_curve(&f, &bs)) {
        println!("Q(F, {b:>3}) = {:.4}  window starts at {}", q.value, q.argmax_x);
    }
    for n in [1, 2, 4, 8, 16] {
        let power = conv_power(&f, n, 0.0)?;
        println!("n = {n:>2}: {:>4} atoms, Q(F^n, 1) = {:.6}", power.len(), q_exact(&power, 1.0).value);
    }
    Ok(())
}
