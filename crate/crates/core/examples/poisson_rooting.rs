//! Poisson process on a weighted finite space and the desingularization weight.

use mtlab::poisson::{desingularization_weight_exact, poisson_audit, WeightedSpace};
use mtlab::util::fmt_q;

fn main() -> mtlab::Result<()> {
    let x = WeightedSpace::new(vec![0.3, 0.5, 0.2, 0.4], None)?;
    let a = poisson_audit(&x, &[0, 1], Some(&[2, 3]), 100_000, 7)?;
    println!("vol(A) = {}", a.volume);
    println!("P(empty): observed {:.5}, e^-vol {:.5}", a.empty_frequency, a.empty_expected);
    println!("count chi-square p = {:.3}", a.count_chi2.p_value);
    if let Some(c) = a.correlation {
        println!("corr(N_A, N_B) = {:.4} (sigma {:.4})", c.value, c.sigma);
    }
    let (w, p) = desingularization_weight_exact(1.4)?;
    println!("weight {} times P(nonempty) {} = {}", fmt_q(&w), fmt_q(&p), fmt_q(&(w.clone() * p.clone())));
    Ok(())
}
