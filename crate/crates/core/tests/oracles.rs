//! Library results against independent brute-force computations.

use mtlab::bs::{bs_distance, ExactSource, Side};
use mtlab::chabauty::{hausdorff, usc_distance, usc_distance_grid, FiniteMetricSpace, UscFunction};
use mtlab::geometry::{thin_area, thin_area_mc, SurfaceSpec};
use mtlab::graph::families::{cycle, path, random_connected};
use mtlab::graph::{Generator, GeneratorRoot};
use mtlab::mass_transport::{mtp_sides, Atom, Measure, Space, TransportKernel};
use mtlab::poisson::{desingularization_weight_exact, sample_many, WeightedSpace};
use mtlab::util::{q, q_int, stream_rng, Q};
use num::Zero;

fn line() -> Side {
    Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::IntegerLine)))
}

/// The radius-R ball of C_n is a path exactly when n >= 2R + 2; otherwise it is the
/// whole cycle, which never looks like a path.
fn cycle_line_oracle(n: usize, r_max: usize) -> Q {
    (1..=r_max)
        .filter(|&r| n < 2 * r + 2)
        .map(|r| q(1, 1 << r))
        .fold(Q::zero(), |a, b| a + b)
}

#[test]
fn cycle_versus_line_matches_ball_counting() {
    for n in 3..=30 {
        for r_max in 1..=5 {
            let d = bs_distance(&Side::Exact(ExactSource::UniformRoot(cycle(n))), &line(), r_max).unwrap();
            assert_eq!(d.exact.unwrap(), cycle_line_oracle(n, r_max), "n={n} r_max={r_max}");
        }
    }
    assert_eq!(cycle_line_oracle(3, 3), q(7, 8));
}

#[test]
fn path_versus_line_counts_boundary_roots() {
    // A root of P_n sees a full path of radius R iff it is at least R from both ends.
    for n in 2..=20usize {
        for r in 1..=4usize {
            let d = bs_distance(&Side::Exact(ExactSource::UniformRoot(path(n))), &line(), r).unwrap();
            let tv_at = |rr: usize| q(n.min(2 * rr) as i64, n as i64);
            let expect = (1..=r).map(|rr| tv_at(rr) * q(1, 1 << rr)).fold(Q::zero(), |a, b| a + b);
            assert_eq!(d.exact.unwrap(), expect, "n={n} r={r}");
        }
    }
}

#[test]
fn degree_kernel_sides_by_hand() {
    let mut rng = stream_rng(11, 0);
    for _ in 0..30 {
        let g = random_connected(7, 0.3, &mut rng);
        let n = g.vertex_count();
        let raw: Vec<i64> = (0..n).map(|v| 1 + (v as i64 * 7 + 3) % 5).collect();
        let total: i64 = raw.iter().sum();
        let atoms = (0..n)
            .map(|v| Atom { space: Space::Finite(g.clone().rooted(v).unwrap()), weight: q(raw[v], total) })
            .collect();
        let mu = Measure::new(atoms, true).unwrap();
        // f(p, q) = deg(q) when q ~ p
        let f = TransportKernel::from_graph_fn(2, |d| {
            if d.distance() == 1 {
                q_int(d.graph.degree(d.second) as i64)
            } else {
                Q::zero()
            }
        });
        let s = mtp_sides(&mu, &f).unwrap();
        let (mut left, mut right) = (Q::zero(), Q::zero());
        for u in 0..n {
            let w = q(raw[u], total);
            for v in g.neighbors(u) {
                left += &w * q_int(g.degree(v) as i64);
                right += &w * q_int(g.degree(u) as i64);
            }
        }
        assert_eq!(s.left, left);
        assert_eq!(s.right, right);
    }
}

#[test]
fn poisson_nonempty_probability_matches_one_minus_exp() {
    let x = WeightedSpace::new(vec![0.2, 0.35, 0.1], None).unwrap();
    let n = 200_000;
    let nonempty = sample_many(&x, n, 4).iter().filter(|s| s.arrivals.iter().any(|&a| a > 0)).count();
    let p = 1.0 - (-0.65f64).exp();
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((nonempty as f64 / n as f64 - p).abs() < 4.0 * sigma);
    let (w, pe) = desingularization_weight_exact(0.65).unwrap();
    assert_eq!(w * pe, q_int(1));
}

#[test]
fn usc_distance_of_indicators_is_capped_hausdorff() {
    let k = FiniteMetricSpace::line(&[0.0, 0.3, 1.1, 2.5, 4.0], 0).unwrap();
    for (a, b) in [(vec![0], vec![1]), (vec![0, 2], vec![3]), (vec![4], vec![0, 1, 2])] {
        let d = usc_distance(&k, &UscFunction::indicator(5, &a), &UscFunction::indicator(5, &b)).unwrap();
        let h = hausdorff(&k, &a, &b).unwrap();
        assert!((d - h.min(1.0)).abs() < 1e-12, "{a:?} {b:?}: {d} vs {h}");
    }
    let f = UscFunction::new(vec![0.2, 0.9, 0.5, 0.1, 0.7]).unwrap();
    let g = UscFunction::new(vec![0.6, 0.1, 0.5, 0.8, 0.0]).unwrap();
    assert!((usc_distance(&k, &f, &g).unwrap() - usc_distance_grid(&k, &f, &g, 1e-5)).abs() < 1e-4);
}

#[test]
fn cusp_thin_area_integrates_the_horoball() {
    // Thin above height 1/(2 sinh eps); the area element dx dy / y^2 over a unit strip
    // integrates to 2 sinh eps.
    let s = SurfaceSpec { genus: 0, cusps: 3, short_geodesics: vec![], epsilon0: 0.2 };
    for eps in [0.01f64, 0.05, 0.1, 0.2] {
        let exact = 3.0 * 2.0 * eps.sinh();
        assert!((thin_area(&s, eps).unwrap() - exact).abs() < 1e-12);
        let mc = thin_area_mc(&s, eps, 200_000, 3);
        assert!((mc / exact - 1.0).abs() < 0.01);
    }
}
