//! Bounds that compare Q(F^n, b) with the concentration of a shorter sum.

use concbound::{Bounds, DiscreteDist, MixtureSpec};

fn main() -> concbound::Result<()> {
    let u = DiscreteDist::new(vec![(-2.0, 0.25), (0.0, 0.25), (1.0, 0.5)])?;
    let u = u.shift(-u.mean());
    let spec = MixtureSpec::new(0.2, u, DiscreteDist::point(0.0))?;
    let bounds = Bounds::default();
    let h = DiscreteDist::point(0.0);

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "n", "cor1", "mult", "th1_simple", "th1_gen");
    for n in [16u64, 32, 64, 128] {
        let cor1 = bounds.cor1_rhs(&spec, &h, n, 2.0)?;
        let mult = bounds.mult_rhs_1_7(&spec, n, 0.5, 2.0)?;
        let simple = bounds.th1_simple_rhs(&spec, &h, n, n / 2, 2.0)?;
        let general = bounds.th1_general_rhs(&spec, &h, n, n / 4, n / 2, 2.0)?;
        println!(
            "{n:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            cor1.implied_c, mult.implied_c, simple.implied_c, general.implied_c
        );
    }
    Ok(())
}
