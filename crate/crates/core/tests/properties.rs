use mtlab::bs::{bs_distance, ExactSource, Side};
use mtlab::chabauty::{hausdorff, random_space, random_subset, usc_distance, UscFunction};
use mtlab::geometry::{leaf_distance_bound, leaf_distance_cusp, thin_fraction, SurfaceSpec};
use mtlab::graph::families::random_connected;
use mtlab::graph::Graph;
use mtlab::mass_transport::{laplacian_selfadjoint_gap, mtp_sides, uniform_root_measure, BallFunction, TransportKernel};
use mtlab::poisson::desingularization_weight_exact;
use mtlab::sasaki::{sasaki_matrix, CoordinateMetric, Mat, STEP};
use mtlab::util::{q, q_int, stream_rng};
use num::Zero;
use proptest::prelude::*;

fn graph(seed: u64, n: usize) -> Graph {
    random_connected(n, 0.3, &mut stream_rng(seed, 0))
}

fn exact(g: Graph) -> Side {
    Side::Exact(ExactSource::UniformRoot(g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn uniform_roots_satisfy_transport(seed in any::<u64>(), n in 2usize..10, range in 1usize..4) {
        let mu = uniform_root_measure(&graph(seed, n)).unwrap();
        let s = mtp_sides(&mu, &TransportKernel::hashed(range, seed ^ 1)).unwrap();
        prop_assert!(s.gap.is_zero());
    }

    #[test]
    fn laplacian_is_self_adjoint(seed in any::<u64>(), n in 2usize..10) {
        let mu = uniform_root_measure(&graph(seed, n)).unwrap();
        let f = BallFunction::<f64>::hashed(1, seed);
        let h = BallFunction::<f64>::hashed(2, seed.wrapping_add(1));
        prop_assert!(laplacian_selfadjoint_gap(&mu, &f, &h).unwrap() <= 1e-12);
    }

    #[test]
    fn bs_distance_is_a_bounded_pseudometric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), r in 1usize..4) {
        let (ga, gb, gc) = (graph(a, 6), graph(b, 7), graph(c, 5));
        let d = |x: &Graph, y: &Graph| bs_distance(&exact(x.clone()), &exact(y.clone()), r).unwrap().exact.unwrap();
        let (ab, ba, bc, ac) = (d(&ga, &gb), d(&gb, &ga), d(&gb, &gc), d(&ga, &gc));
        prop_assert_eq!(&ab, &ba);
        prop_assert!(d(&ga, &ga).is_zero());
        prop_assert!(ab <= q_int(1) - q(1, 1 << r));
        prop_assert!(ac <= &ab + &bc);
    }

    #[test]
    fn usc_distance_is_a_metric(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = stream_rng(seed, 1);
        let k = random_space(n, &mut rng);
        let fs: Vec<UscFunction> = (0..3)
            .map(|i| UscFunction::new((0..n).map(|j| ((seed >> (i * 8 + j)) % 97) as f64 / 96.0).collect()).unwrap())
            .collect();
        let d = |i: usize, j: usize| usc_distance(&k, &fs[i], &fs[j]).unwrap();
        prop_assert!(d(0, 0).abs() < 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-12);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        prop_assert!(d(0, 1) <= 1.0 + 1e-12);
        let (a, b) = (random_subset(n, &mut rng), random_subset(n, &mut rng));
        prop_assume!(!a.is_empty() && !b.is_empty());
        prop_assert!((hausdorff(&k, &a, &b).unwrap() - hausdorff(&k, &b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn desingularization_is_exact(vol in 0.01f64..6.0) {
        let (w, p) = desingularization_weight_exact(vol).unwrap();
        prop_assert_eq!(w * p, q_int(1));
    }

    #[test]
    fn thin_fraction_is_monotone(genus in 0u32..4, cusps in 0u32..4, l1 in 0.005f64..0.3, l2 in 0.005f64..0.3, e in 0.001f64..0.19) {
        prop_assume!(2 * genus + cusps > 2 && genus + cusps > 0);
        let s = SurfaceSpec { genus, cusps, short_geodesics: if genus > 0 { vec![l1, l2] } else { vec![] }, epsilon0: 0.2 };
        prop_assume!(s.validate().is_ok());
        prop_assert!(thin_fraction(&s, e).unwrap() <= thin_fraction(&s, e + 0.01).unwrap());
    }

    #[test]
    fn cusp_leaves_are_far_apart(eps0 in 0.01f64..0.8, t in 0.0001f64..1.0) {
        let eps = eps0 * t;
        prop_assert!(leaf_distance_cusp(eps, eps0).unwrap() >= leaf_distance_bound(eps, eps0, 1.0) - 1e-12);
    }

    #[test]
    fn flat_lift_is_the_identity(x in -0.5f64..0.5, y in -0.5f64..0.5, u in -3.0f64..3.0, v in -3.0f64..3.0) {
        let e = CoordinateMetric::euclidean(2, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        prop_assert_eq!(sasaki_matrix(&e, &[x, y], &[u, v], STEP).unwrap(), Mat::identity(4, 4));
    }
}
