//! Sasaki lifts: the block identities and derivative ratios of bilipschitz pairs.

use mtlab::sasaki::{bilipschitz_ratio, derivative_ratio_audit, relationship_audit, CoordinateMetric};

fn main() -> mtlab::Result<()> {
    let h = CoordinateMetric::hyperbolic(vec![[-1.0, 1.0], [0.5, 2.0]])?;
    let r = relationship_audit(&h, &[0.2, 1.1], 100)?;
    println!("hyperbolic: block error {:.1e}, derivative error {:.1e}", r.block_error, r.derivative_error);
    for (name, other) in [("scaled by 1.69", h.scaled(1.69)), ("small bump", h.bumped(0.01, vec![0.1, 1.2], 0.4))] {
        for k in 1..=2 {
            let est = bilipschitz_ratio(&h, &other, k, 200)?;
            let a = derivative_ratio_audit(&h, &other, est.lambda, k, 20)?;
            println!("{name:<15} k={k} lambda={:.4} checked={} violations={}", est.lambda, a.checked, a.violations);
        }
    }
    Ok(())
}
