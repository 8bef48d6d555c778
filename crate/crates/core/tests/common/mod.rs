#![allow(dead_code)]

use num_traits::{One, Zero};
use periflex::exact::{rat, rat_from_f64, RatMatrix, Rational};
use periflex::placement::upper_index;
use periflex::{IntMatrix, LabeledEdge, PeriodicGraph, PlacementParams, Relaxation, SublatticeMap};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn random_label(rng: &mut impl Rng, d: usize, r: i64) -> Vec<i64> {
    (0..d).map(|_| rng.random_range(-r..=r)).collect()
}

/// Valid graph with `n` vertex orbits and `m` edge orbits, labels in `[-1, 1]^d`.
pub fn random_graph(rng: &mut impl Rng, d: usize, n: usize, m: usize) -> PeriodicGraph {
    assert!(m + 1 >= n + d, "cycle labels of {m} edges on {n} vertices cannot span Z^{d}");
    loop {
        let mut edges = Vec::with_capacity(m);
        // a path keeps the quotient connected
        for i in 1..n {
            edges.push(LabeledEdge::new(rng.random_range(0..i), i, random_label(rng, d, 1)));
        }
        while edges.len() < m {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let l = random_label(rng, d, 1);
            if a == b && l.iter().all(|&v| v == 0) {
                continue;
            }
            edges.push(LabeledEdge::new(a, b, l));
        }
        let g = PeriodicGraph::new(d, n, edges, None).unwrap();
        if g.validate().is_valid() {
            return g;
        }
    }
}

/// One vertex orbit with `loops` loops relaxed to an index-`index` sublattice:
/// graphs with plenty of automorphisms and several vertex orbits.
pub fn random_symmetric_graph(rng: &mut impl Rng, d: usize, loops: usize, index: i64) -> Relaxation {
    loop {
        let edges: Vec<LabeledEdge> = (0..loops)
            .map(|_| loop {
                let l = random_label(rng, d, 2);
                if l.iter().any(|&v| v != 0) {
                    break LabeledEdge::new(0, 0, l);
                }
            })
            .collect();
        let g = PeriodicGraph::new(d, 1, edges, None).unwrap();
        if !g.validate().is_valid() {
            continue;
        }
        let mut diag = vec![1; d];
        diag[rng.random_range(0..d)] = index;
        let rows: Vec<Vec<i64>> =
            (0..d).map(|r| (0..d).map(|c| if r == c { diag[r] } else { 0 }).collect()).collect();
        let m = SublatticeMap::new(IntMatrix::from_rows(&rows).unwrap()).unwrap();
        return periflex::relax_graph(&g, &m, 64).unwrap();
    }
}

/// The five randomized graphs used by the equivariance and representation suites.
pub fn randomized_suite(rng: &mut impl Rng) -> Vec<PeriodicGraph> {
    vec![
        random_symmetric_graph(rng, 2, 2, 4).graph,
        random_symmetric_graph(rng, 2, 3, 3).graph,
        random_symmetric_graph(rng, 3, 3, 2).graph,
        random_symmetric_graph(rng, 3, 3, 3).graph,
        random_graph(rng, 2, 3, 7),
    ]
}

pub fn random_params(rng: &mut impl Rng, g: &PeriodicGraph) -> PlacementParams {
    periflex::analysis::random_params(g, rng, 1e-10)
}

/// Random rational with small numerator and denominator.
pub fn random_rational(rng: &mut impl Rng) -> Rational {
    let den = *[1i64, 2, 3, 4, 5, 7].choose(rng).unwrap();
    rat(rng.random_range(-20..=20)) / rat(den)
}

pub fn exact_vector(x: &[f64]) -> Vec<Rational> {
    x.iter().copied().map(rat_from_f64).collect()
}

/// Rigidity matrix evaluated in exact arithmetic, written independently of
/// the library's floating-point assembly.
pub fn exact_rigidity_matrix(g: &PeriodicGraph, x: &[Rational]) -> RatMatrix {
    let d = g.dim();
    let t_cols = d * (g.vertex_count() - 1);
    let omega = |a: usize, b: usize| x[t_cols + upper_index(d, a.min(b), a.max(b))].clone();
    let shift = |i: usize, k: usize| if i == 0 { Rational::zero() } else { x[(i - 1) * d + k].clone() };
    let mut m = RatMatrix::zeros(g.edge_count(), g.parameter_dim());
    for (r, e) in g.edges().iter().enumerate() {
        let w: Vec<Rational> =
            (0..d).map(|k| shift(e.head, k) + rat(e.label[k]) - shift(e.tail, k)).collect();
        let two = rat(2);
        if e.tail != e.head {
            for a in 0..d {
                let mut grad = Rational::zero();
                for b in 0..d {
                    grad += &two * omega(a, b) * &w[b];
                }
                if e.head > 0 {
                    m.set(r, (e.head - 1) * d + a, m.get(r, (e.head - 1) * d + a) + &grad);
                }
                if e.tail > 0 {
                    m.set(r, (e.tail - 1) * d + a, m.get(r, (e.tail - 1) * d + a) - &grad);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = if a == b { &w[a] * &w[a] } else { &two * &w[a] * &w[b] };
                m.set(r, t_cols + upper_index(d, a, b), v);
            }
        }
    }
    m
}

pub fn lerp(lambda: &Rational, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
    let mu = Rational::one() - lambda;
    x.iter().zip(y).map(|(a, b)| lambda * a + &mu * b).collect()
}
