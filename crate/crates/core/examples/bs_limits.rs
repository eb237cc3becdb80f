//! Cycles converge to the line; barbells approach the square grid.

use mtlab::bs::{bs_distance, ExactSource, McSample, Side};
use mtlab::graph::families::{barbell, cycle};
use mtlab::graph::{Generator, GeneratorRoot};
use mtlab::mass_transport::Sampler;
use mtlab::util::fmt_q;

fn main() -> mtlab::Result<()> {
    let line = Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::IntegerLine)));
    for n in [3, 4, 5, 6, 7, 8, 16] {
        let d = bs_distance(&Side::Exact(ExactSource::UniformRoot(cycle(n))), &line, 3)?;
        println!("d(C_{n}, Z) = {}", fmt_q(&d.exact.unwrap()));
    }
    let grid = Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::Grid2d)));
    for n in [4, 8, 16, 32] {
        let s = McSample::draw(&Sampler::uniform_root(barbell(n))?, 3, 100_000, n as u64)?;
        let d = bs_distance(&Side::Mc(s), &grid, 3)?;
        println!("d(barbell({n}), Z^2) = {:.4} +- {:.4}", d.value, d.sigma.unwrap_or(0.0));
    }
    Ok(())
}
