//! Thin parts of a genus-two surface with a cusp, and the distortion of the leaf map.

use mtlab::geometry::{gmap_audit, thickbase_audit, thin_area, thin_area_mc, LeafGeometry, SurfaceSpec};

fn main() -> mtlab::Result<()> {
    let s = SurfaceSpec::new(2, 1, vec![0.05, 0.12], 0.2)?;
    for eps in [0.2, 0.1, 0.05, 0.02] {
        println!("eps={eps:<5} area {:.5}  monte carlo {:.5}", thin_area(&s, eps)?, thin_area_mc(&s, eps, 200_000, 1));
    }
    let tb = thickbase_audit(&s, &[0.2, 0.1, 0.05, 0.02, 0.01])?;
    for r in &tb.rows {
        println!("eps={:<5} fraction {:.5} bound {:.3}", r.eps, r.fraction, r.bound);
    }
    for g in [LeafGeometry::Cusp, LeafGeometry::Tube { length: 0.01 }] {
        let a = gmap_audit(g, 0.05, 0.2, 2000)?;
        println!("{:?}: min Jacobian / D = {:.3}, violations {}", g, a.min_jacobian / a.d, a.violations);
    }
    Ok(())
}
