//! The law F_n = ½δ₋ₙ + ½δₙ: Q(F_n^n, 1) decays like n^(-1/2), yet the
//! constant needed by the sharpened bound grows like √n.

use concbound::{Bounds, DiscreteDist};

fn main() -> concbound::Result<()> {
    let bounds = Bounds::default();
    println!("{:>6} {:>12} {:>12} {:>12}", "n", "sqrt(n) Q", "esseen c", "sharpened c");
    for n in [16u64, 64, 256, 1024, 4096] {
        let f = DiscreteDist::two_point(n as f64)?;
        let esseen = bounds.esseen_rhs_1_11(&f, n, 1.0)?;
        let sharpened = bounds.sharpened_rhs_1_13(&f, n, 1.0)?;
        println!(
            "{n:>6} {:>12.6} {:>12.6} {:>12.4}",
            esseen.lhs * (n as f64).sqrt(),
            esseen.implied_c,
            sharpened.implied_c
        );
    }
    println!("limit sqrt(2/pi) = {:.6}", (2.0 / std::f64::consts::PI).sqrt());
    Ok(())
}
