//! Curvature comparison bounds on a grid and fellow-travelling geodesics.

use mtlab::geometry::{comparison_audit, fellow_travel_simulation, ComparisonMode};

fn main() {
    let params: Vec<f64> = (1..=10).map(|i| i as f64 * 0.2).collect();
    let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
    for mode in ComparisonMode::ALL {
        let p: Vec<f64> = if matches!(mode, ComparisonMode::Angle) {
            params.iter().map(|x| x * 1.5).collect()
        } else {
            params.clone()
        };
        let r = comparison_audit(mode, &p, &times, &[0.5, 1.0, 2.0]);
        println!("{:<10} cells={} violations={} ode error={:.2e}", mode.name(), r.cells, r.violations, r.max_ode_error);
    }
    let f = fellow_travel_simulation(2000, 1);
    println!("fellow travel: {} pairs, {} violations, max ratio {:.3}", f.pairs, f.violations, f.max_ratio);
}
