//! Smallest constant a bound needs on a family of scenarios.

use concbound::{estimate_constant, BoundId, BoundRequest, Bounds, DiscreteDist, MixtureSpec};

fn main() -> concbound::Result<()> {
    let bounds = Bounds::default();
    let mut family = Vec::new();
    for p in [0.0, 0.25, 0.5] {
        let u = DiscreteDist::two_point(1.0)?;
        let spec = MixtureSpec::new(p, u, DiscreteDist::point(0.0))?;
        for n in [16u64, 64, 256] {
            for b in [1.0, 2.0] {
                family.push(BoundRequest::Cor1 {
                    spec: spec.clone(),
                    h: DiscreteDist::point(0.0),
                    n,
                    b,
                });
            }
        }
    }
    let estimate = estimate_constant(&bounds, family, BoundId::Cor1)?;
    println!("c_hat = {:.6} over {} admissible scenarios", estimate.c_hat, estimate.admissible);
    println!("witness: {:?}", estimate.witness.params);
    Ok(())
}
