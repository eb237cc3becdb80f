//! Every conjugacy class of subgroups of S4 is an invariant random subgroup; its
//! Schreier graphs form a unimodular measure.

use mtlab::mass_transport::is_unimodular;
use mtlab::schreier::{catalog, irs_to_ursg, Irs};
use mtlab::util::q_int;

fn main() -> mtlab::Result<()> {
    let ex = catalog::s4();
    for class in ex.group.subgroup_classes() {
        let irs = Irs::conjugacy_class(ex.group.clone(), &class[0]);
        let mu = irs_to_ursg(&irs, &ex.gens)?;
        let v = is_unimodular(&mu, 3, &q_int(0))?;
        println!(
            "subgroup order {:>2}, {} conjugates: {} rooted types, unimodular={}",
            class[0].order(),
            class.len(),
            v.types,
            v.pass
        );
    }
    Ok(())
}
