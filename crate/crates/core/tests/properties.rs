mod common;

use periflex::exact::{rat_from_f64, Rational};
use periflex::symmetry::barycenter_point;
use periflex::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy() -> impl Strategy<Value = PeriodicGraph> {
    (1usize..=3, 1usize..=3, 0usize..=4, any::<u64>()).prop_map(|(d, n, extra, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_graph(&mut rng, d, n, n - 1 + d + extra)
    })
}

fn unimodular(d: usize, seed: u64) -> IntMatrix {
    // product of elementary shears and sign flips
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = IntMatrix::identity(d);
    for _ in 0..4 {
        let mut e = IntMatrix::identity(d);
        let (a, b) = (rand::Rng::random_range(&mut rng, 0..d), rand::Rng::random_range(&mut rng, 0..d));
        if a == b {
            e.set(a, a, -1);
        } else {
            e.set(a, b, rand::Rng::random_range(&mut rng, -2..=2));
        }
        m = m.mul(&e);
    }
    m
}

fn sublattice_strategy() -> impl Strategy<Value = SublatticeMap> {
    (1i64..=3, 1i64..=3, -2i64..=2, -2i64..=2).prop_filter_map("singular", |(a, b, c, e)| {
        let rows = vec![vec![a, c], vec![e, b]];
        let m = IntMatrix::from_rows(&rows)?;
        (m.det().unsigned_abs() <= 8).then(|| SublatticeMap::new(m).ok()).flatten()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_json_round_trip(g in graph_strategy()) {
        let back = PeriodicGraph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn params_json_round_trip(g in graph_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_params(&mut rng, &g);
        prop_assert_eq!(PlacementParams::from_json(&p.to_json(), 1e-10).unwrap(), p);
    }

    #[test]
    fn validation_ignores_basis_and_orientation(g in graph_strategy(), seed in any::<u64>(), flips in any::<u64>()) {
        let c = unimodular(g.dim(), seed);
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let moved = LabeledEdge::new(e.tail, e.head, c.mul_vec(&e.label));
                if flips >> (k % 64) & 1 == 1 { moved.reversed() } else { moved }
            })
            .collect();
        let h = PeriodicGraph::new(g.dim(), g.vertex_count(), edges, None).unwrap();
        let (a, b) = (g.validate(), h.validate());
        prop_assert_eq!(a.connected, b.connected);
        prop_assert_eq!(a.label_lattice_rank, b.label_lattice_rank);
        prop_assert_eq!(a.label_lattice_index, b.label_lattice_index);
    }

    #[test]
    fn coset_locate_round_trips(m in sublattice_strategy(), v in prop::collection::vec(-9i64..=9, 2)) {
        let reps = coset_representatives(&m, 64).unwrap();
        prop_assert_eq!(reps.len() as u64, m.index());
        let (j, q) = reps.locate(&v);
        let back: Vec<i64> = m.matrix().mul_vec(&q).iter().zip(&reps.reps[j]).map(|(a, b)| a + b).collect();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn relaxation_is_affine(m in sublattice_strategy(), seed in any::<u64>()) {
        let g = nets::honeycomb();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Rational> = (0..g.parameter_dim()).map(|_| common::random_rational(&mut rng)).collect();
        let y: Vec<Rational> = (0..g.parameter_dim()).map(|_| common::random_rational(&mut rng)).collect();
        let lambda = common::random_rational(&mut rng);
        let lhs = relax_params_exact(&common::lerp(&lambda, &x, &y), &m, &g, 64).unwrap();
        let rhs = common::lerp(
            &lambda,
            &relax_params_exact(&x, &m, &g, 64).unwrap(),
            &relax_params_exact(&y, &m, &g, 64).unwrap(),
        );
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn relaxation_preserves_lengths(m in sublattice_strategy(), seed in any::<u64>()) {
        let g = nets::kagome();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_params(&mut rng, &g);
        let relaxed = relax_graph(&g, &m, 64).unwrap();
        prop_assert!(relaxed.graph.validate().is_valid());
        let q = relax_params(&p, &m, &g, 64, 1e-12).unwrap();
        let f = edge_lengths_sq(&p, &g).unwrap().values;
        let fr = edge_lengths_sq(&q, &relaxed.graph).unwrap().values;
        for (k, &(e, _)) in relaxed.edge_map.iter().enumerate() {
            prop_assert!((fr[k] - f[e]).abs() <= 1e-9 * f[e].max(1.0));
        }
    }

    #[test]
    fn realize_then_quotient_is_identity(g in graph_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_params(&mut rng, &g);
        let back = quotient_map(&realize(&p, 1e-10).unwrap(), 1e-10).unwrap();
        for (a, b) in back.to_vector().iter().zip(p.to_vector()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn group_elements_invert(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_symmetric_graph(&mut rng, 2, 2, 2).graph;
        for a in enumerate_automorphisms(&g, 1_000_000).unwrap() {
            prop_assert!(a.compose(&a.inverse()).is_identity());
            prop_assert!(affine_action(&a.inverse(), &g).unwrap().compose(&affine_action(&a, &g).unwrap()).is_identity());
        }
    }

    #[test]
    fn barycenters_are_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_symmetric_graph(&mut rng, 2, 3, 2).graph;
        let group = enumerate_automorphisms(&g, 1_000_000).unwrap();
        let a = &group[rand::Rng::random_range(&mut rng, 0..group.len())];
        let p = barycenter_point(std::slice::from_ref(a), &g, &common::random_params(&mut rng, &g), 1e-10).unwrap();
        prop_assert!(is_symmetry(a, &p, &g, 1e-9).unwrap());
        let x: Vec<Rational> = p.to_vector().into_iter().map(rat_from_f64).collect();
        let locus = fixed_locus(std::slice::from_ref(a), &g).unwrap().locus;
        // rounding moves the point off the exact locus, but only slightly
        let y = affine_action(a, &g).unwrap().apply(&x);
        let gap = y.iter().zip(&x).map(|(u, v)| periflex::exact::rat_to_f64(&(u - v)).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-12);
        prop_assert!(locus.dim() <= g.parameter_dim());
    }
}
