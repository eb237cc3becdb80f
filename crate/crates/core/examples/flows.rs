//! Invariance of lifted torus densities under the geodesic flow, and the transport
//! gap on a one-manifold.

use mtlab::flows::{defect_lower_bound, gap_slopes, m1_mtp_sides, Bins, OneManifoldMeasure, TorusDensity};

fn main() -> mtlab::Result<()> {
    for src in ["1", "1+0.5*cos(2*pi*x)"] {
        let mu = TorusDensity::parse(src)?;
        let b = defect_lower_bound(&mu, 0.37, Bins::DEFAULT, 1_000_000, 5)?;
        println!("{src:<20} defect {:.4}  provable lower bound {:.4}", b.estimate.defect, b.lower_bound);
    }
    let nu = OneManifoldMeasure::new(vec![(1.0, 1.0)])?;
    let half = |_: f64, y: f64| if y <= 0.5 { 1.0 } else { 0.0 };
    let rows = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| m1_mtp_sides(&nu, half, None, h))
        .collect::<mtlab::Result<Vec<_>>>()?;
    for r in &rows {
        println!("h={:e} gap {:.3e}", r.h, r.gap);
    }
    println!("log-log slopes {:?}", gap_slopes(&rows));
    Ok(())
}
