//! A probability measure cannot put a finite nonempty core on an infinite graph;
//! a sigma-finite one can.

use mtlab::mass_transport::no_core_audit;
use mtlab::suite::{core_predicate, marked_line_demo, probability_corpus};

fn main() -> mtlab::Result<()> {
    let core = core_predicate();
    for (name, m) in probability_corpus(1)?.into_iter().take(9) {
        println!("{name:<30} consistent={}", no_core_audit(&m, &core)?.consistent);
    }
    let r = no_core_audit(&marked_line_demo(), &core)?;
    println!("marked line: consistent={} caveat: {}", r.consistent, r.caveat.unwrap_or_default());
    Ok(())
}
