//! Splitting F = (1-p)U + pV into binomially weighted components.

use concbound::{
    conv_power, convolve, mixture_expand, mixture_sum, q_exact, DiscreteDist, MixtureSpec,
};

fn main() -> concbound::Result<()> {
    let u = DiscreteDist::two_point(1.0)?;
    let v = DiscreteDist::new(vec![(0.0, 0.5), (3.0, 0.5)])?;
    let h = DiscreteDist::new(vec![(0.0, 0.7), (0.25, 0.3)])?;
    let spec = MixtureSpec::new(0.3, u, v)?;
    let n = 6;

    let parts = mixture_expand(&spec, &h, n, 0.0)?;
    let b = 1.0;
    let mut averaged = 0.0;
    for (k, (w, component)) in parts.iter().enumerate() {
        let q = q_exact(component, b).value;
        averaged += w * q;
        println!("k = {k}: weight {w:.5}, Q(H U^(n-k) V^k, {b}) = {q:.5}");
    }
    let direct = convolve(&h, &conv_power(&spec.mixed(), n, 0.0)?)?;
    println!("TV(sum of parts, H F^n) = {:.1e}", mixture_sum(&parts).total_variation(&direct));
    println!("Q(H F^n, {b}) = {:.5} <= {averaged:.5}", q_exact(&direct, b).value);
    Ok(())
}
