//! Certify unimodularity of a few rooted-graph measures and print the witness for a
//! measure that fails.

use mtlab::graph::families::{barbell, cycle, path};
use mtlab::mass_transport::{is_unimodular, uniform_root_measure, Measure, Space};
use mtlab::util::{fmt_q, q_int};

fn main() -> mtlab::Result<()> {
    let zero = q_int(0);
    for (name, g) in [("C5", cycle(5)), ("P4", path(4)), ("barbell(2)", barbell(2))] {
        let v = is_unimodular(&uniform_root_measure(&g)?, 3, &zero)?;
        println!("{name:<12} uniform root: pass={} types={}", v.pass, v.types);
    }
    let center = Measure::point(Space::Finite(path(3).rooted(1)?));
    let v = is_unimodular(&center, 1, &zero)?;
    println!("P3 rooted at its center: pass={} gap={}", v.pass, fmt_q(&v.max_gap));
    if let Some(w) = v.witness {
        println!("  witness: left={} right={} code={}", fmt_q(&w.left), fmt_q(&w.right), w.code.hex());
    }
    Ok(())
}
