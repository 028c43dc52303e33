//! Characteristic-function bounds, direct and after splitting off nα terms.

use concbound::{Bounds, DiscreteDist, MixtureSpec};

fn main() -> concbound::Result<()> {
    let u = DiscreteDist::new(vec![(-1.0, 0.3), (0.0, 0.2), (0.5, 0.2), (1.0, 0.3)])?;
    let u = u.shift(-u.mean());
    let spec = MixtureSpec::pure(u)?;
    let bounds = Bounds::default();
    let b = 2.0;
    for n in [8u64, 16, 32, 64] {
        let split = bounds.cf_bound_1_16(&spec, n, 0.5, b)?;
        println!(
            "n = {n:>2}: Q = {:.5}, split rhs = {:.5}, direct rhs = {:.5}, hypothesis {}",
            split.lhs, split.rhs_unit, split.params["rhs_cf_1_15"], split.hypothesis_ok
        );
    }
    Ok(())
}
