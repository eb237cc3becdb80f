//! Hypograph distances between upper semicontinuous functions and a convergence test.

use mtlab::chabauty::{chabauty_convergence_test, hausdorff, lemchab_audit, usc_distance, FiniteMetricSpace, UscFunction};

fn main() -> mtlab::Result<()> {
    let k = FiniteMetricSpace::line(&[0.0, 0.25, 0.7, 1.6, 3.0], 0)?;
    let (a, b) = (vec![0, 2], vec![1, 4]);
    let d = usc_distance(&k, &UscFunction::indicator(5, &a), &UscFunction::indicator(5, &b))?;
    println!("d(1_A, 1_B) = {d:.4}, Hausdorff = {:.4}", hausdorff(&k, &a, &b)?);

    let r = lemchab_audit(500, 8, 3);
    println!("weighted comparison: {} trials, {} violations", r.trials, r.violations);

    let mut xs = vec![0.0, 3.0];
    xs.extend((1..=40).map(|i| 1.0 / i as f64));
    let k = FiniteMetricSpace::line(&xs, 0)?;
    let seq: Vec<Vec<usize>> = (2..42).map(|i| vec![i, 1]).collect();
    let v = chabauty_convergence_test(&k, &seq, &[0, 1], &[1.0, 2.0, 4.0], 0.1)?;
    println!("{{1/i, 3}} -> {{0, 3}}: converged={}", v.converged);
    for row in &v.rows {
        println!("  R={} last distance {:.4}", row.radius, row.distances.last().unwrap());
    }
    Ok(())
}
