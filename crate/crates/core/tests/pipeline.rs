//! End-to-end workflows across modules.

mod common;

use periflex::analysis::TraceOptions;
use periflex::placement::squared_lengths_at;
use periflex::symmetry::{automorphisms_from_json, automorphisms_to_json, barycenter_point, edge_orbit_quotient};
use periflex::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KAGOME: &str = r#"{
  "d": 2, "n": 3,
  "edges": [
    {"tail": 0, "head": 1, "label": [0, 0]},
    {"tail": 0, "head": 2, "label": [0, 0]},
    {"tail": 1, "head": 2, "label": [0, 0]},
    {"tail": 0, "head": 1, "label": [-1, 0]},
    {"tail": 0, "head": 2, "label": [0, -1]},
    {"tail": 1, "head": 2, "label": [1, -1]}
  ],
  "names": ["a", "b", "c"]
}"#;

#[test]
fn symmetric_deformation_of_kagome() {
    let tol = Tolerances::default();
    let g = PeriodicGraph::from_json(KAGOME).unwrap();
    g.require_valid().unwrap();
    let group = enumerate_automorphisms(&g, Limits::default().automorphism_nodes).unwrap();
    assert_eq!(group.len(), 12);

    // round trip through the document format
    let back = automorphisms_from_json(&automorphisms_to_json(&group)).unwrap();
    assert_eq!(back, group);

    let rotations: Vec<Automorphism> = group.iter().filter(|a| a.matrix().det() == 1).cloned().collect();
    let fixed = fixed_locus(&rotations, &g).unwrap();
    assert!(fixed.base_positive_definite);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let point = barycenter_point(&rotations, &g, &common::random_params(&mut rng, &g), tol.pd_tol).unwrap();
    for a in &rotations {
        assert!(is_symmetry(a, &point, &g, tol.sym_tol).unwrap());
        let iso = realize_isometry(a, &point, &g, &tol).unwrap();
        assert!(iso.orthogonality_defect() < 1e-9);
    }
    let restricted = symmetric_restriction(&g, &rotations, &point, &tol).unwrap();
    let full = flex_dimension(&point, &g, tol.rank_rel_tol).unwrap();
    assert_eq!(restricted.orbit_classes, edge_orbit_quotient(&rotations, &g).unwrap());
    assert!(restricted.flex_dim <= full);
    assert_eq!(restricted.flex_dim + restricted.rank, restricted.locus.dim());

    let opts = TraceOptions { steps: 8, step_size: 0.02, ..TraceOptions::default() };
    let path = trace_deformation(&g, &point, Some(&restricted.locus), &opts, &tol).unwrap();
    assert_eq!(path.is_empty(), restricted.flex_dim == 0);
    for s in &path.samples {
        for a in &rotations {
            assert!(is_symmetry(a, s, &g, 1e-7).unwrap());
        }
    }
    assert!(path.max_length_deviation(&g) <= tol.path_tol);
}

#[test]
fn relaxed_framework_keeps_old_translations_as_symmetries() {
    let tol = Tolerances::default();
    let g = nets::honeycomb();
    let m = SublatticeMap::new(IntMatrix::from_rows(&[vec![2, 1], vec![0, 1]]).unwrap()).unwrap();
    let relaxed = relax_graph(&g, &m, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = common::random_params(&mut rng, &g);
    let q = relax_params(&p, &m, &g, 64, tol.pd_tol).unwrap();
    for gamma in [[1, 0], [0, 1], [1, 1]] {
        let t = relaxed.lattice_translation(&gamma);
        t.check(&relaxed.graph).unwrap();
        assert!(is_symmetry(&t, &q, &relaxed.graph, 1e-8).unwrap());
    }
    // the relaxed flex space contains the original one
    let small = flex_dimension(&p, &g, tol.rank_rel_tol).unwrap();
    let big = flex_dimension(&q, &relaxed.graph, tol.rank_rel_tol).unwrap();
    assert!(big >= small);
    let f = squared_lengths_at(&g, &p.to_vector());
    let pulled = lattice::pull_back_lengths(&relaxed, &squared_lengths_at(&relaxed.graph, &q.to_vector()));
    for (e, copies) in pulled.iter().enumerate() {
        assert_eq!(copies.len(), 2);
        assert!(copies.iter().all(|v| (v - f[e]).abs() < 1e-10));
    }
}

#[test]
fn common_symmetries_after_relaxation() {
    let g = nets::square();
    let relaxed = relax_graph(&g, &SublatticeMap::scalar(2, 2), 64).unwrap();
    let group = enumerate_automorphisms(&relaxed.graph, 1_000_000).unwrap();
    let translations: Vec<Automorphism> = [[1, 0], [0, 1]].iter().map(|v| relaxed.lattice_translation(v)).collect();
    let common = intersect_symmetry_groups(&group, &translations, &relaxed.graph).unwrap();
    assert_eq!(common.len(), 4);
    assert!(common[0].is_identity());
}

#[test]
fn placement_round_trips_through_documents() {
    let g = PeriodicGraph::from_json(KAGOME).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = common::random_params(&mut rng, &g);
    let back = PlacementParams::from_json(&p.to_json(), 1e-10).unwrap();
    assert_eq!(back, p);
    let raw = realize(&p, 1e-10).unwrap();
    let f = edge_lengths_sq(&p, &g).unwrap();
    for (e, v) in g.edges().iter().zip(&f.values) {
        let len = (raw.position(e.head, &e.label) - raw.position(e.tail, &[0, 0])).norm_squared();
        assert!((len - v).abs() < 1e-10);
    }
}
