//! Graph automorphisms modulo periodicity and their action on placement
//! parameters.
//!
//! An automorphism `σ` of `(G, Γ)` is recorded by its effect on the vertex
//! representatives, `σ(v_i) = v_{perm(i)} + n_i`, together with the unimodular
//! matrix `C` of the conjugation it induces on `Γ ≅ Z^d`. Elements are kept
//! modulo `Γ`: [`Automorphism::normalized`] shifts all offsets so `n_0 = 0`.
//!
//! The left action `σ·(p, π) = (p ∘ σ⁻¹, π ∘ C_{σ⁻¹})` is affine in the
//! parameters `(t, ω)`: `ω ↦ C⁻ᵗ ω C⁻¹` and
//! `t_j ↦ C(t_{σ⁻¹(j)} − t_{σ⁻¹(0)}) + n_{σ⁻¹(0)} − n_{σ⁻¹(j)}`.
//! All of it is computed over the rationals.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, rat, IntMatrix, RatMatrix, Rational};
use crate::graph::{LabeledEdge, PeriodicGraph};
use crate::linalg;
use crate::placement::{self, upper_index, upper_len, PlacementParams};

/// Hard stop for subgroup closure; a genuine `Aut(G,Γ)/Γ` is far smaller.
const MAX_GROUP_ORDER: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    perm: Vec<usize>,
    matrix: IntMatrix,
    offsets: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismDocument {
    pub perm: Vec<usize>,
    #[serde(rename = "C")]
    pub matrix: Vec<Vec<i64>>,
    pub offsets: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(AutomorphismDocument),
    Many(Vec<AutomorphismDocument>),
}

impl Automorphism {
    pub fn new(perm: Vec<usize>, matrix: IntMatrix, offsets: Vec<Vec<i64>>) -> Result<Self> {
        let n = perm.len();
        let d = matrix.rows();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidAutomorphism("perm is not a permutation".into()));
            }
            seen[p] = true;
        }
        if matrix.cols() != d || d == 0 {
            return Err(Error::InvalidAutomorphism("C must be a square matrix".into()));
        }
        if matrix.det().abs() != 1 {
            return Err(Error::InvalidAutomorphism("C is not unimodular".into()));
        }
        if offsets.len() != n || offsets.iter().any(|o| o.len() != d) {
            return Err(Error::InvalidAutomorphism(format!("expected {n} offsets of length {d}")));
        }
        Ok(Self { perm, matrix, offsets })
    }

    pub fn identity(dim: usize, vertex_count: usize) -> Self {
        Self {
            perm: (0..vertex_count).collect(),
            matrix: IntMatrix::identity(dim),
            offsets: vec![vec![0; dim]; vertex_count],
        }
    }

    /// The lattice translation by `gamma`; trivial modulo `Γ`.
    pub fn translation(vertex_count: usize, gamma: &[i64]) -> Self {
        Self {
            perm: (0..vertex_count).collect(),
            matrix: IntMatrix::identity(gamma.len()),
            offsets: vec![gamma.to_vec(); vertex_count],
        }
    }

    pub fn from_document(doc: &AutomorphismDocument) -> Result<Self> {
        let matrix = IntMatrix::from_rows(&doc.matrix)
            .ok_or_else(|| Error::Parse("ragged matrix C".into()))?;
        Self::new(doc.perm.clone(), matrix, doc.offsets.clone())
    }

    pub fn to_document(&self) -> AutomorphismDocument {
        AutomorphismDocument {
            perm: self.perm.clone(),
            matrix: self.matrix.to_rows(),
            offsets: self.offsets.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn vertex_count(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn is_identity(&self) -> bool {
        let n = self.normalized();
        n.perm.iter().enumerate().all(|(i, &p)| i == p)
            && n.matrix.is_identity()
            && n.offsets.iter().flatten().all(|&v| v == 0)
    }

    /// Identity perm, `C = I` and equal offsets: an element of `Γ`.
    pub fn is_translation(&self) -> bool {
        self.is_identity()
    }

    /// Representative with `n_0 = 0`.
    pub fn normalized(&self) -> Self {
        let base = self.offsets[0].clone();
        let offsets =
            self.offsets.iter().map(|o| o.iter().zip(&base).map(|(a, b)| a - b).collect()).collect();
        Self { perm: self.perm.clone(), matrix: self.matrix.clone(), offsets }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let perm = other.perm.iter().map(|&i| self.perm[i]).collect();
        let matrix = self.matrix.mul(&other.matrix);
        let offsets = (0..other.perm.len())
            .map(|i| {
                let moved = self.matrix.mul_vec(&other.offsets[i]);
                moved.iter().zip(&self.offsets[other.perm[i]]).map(|(a, b)| a + b).collect()
            })
            .collect();
        Self { perm, matrix, offsets }
    }

    pub fn inverse(&self) -> Self {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p] = i;
        }
        let matrix = self.matrix.inverse_unimodular().expect("C is unimodular");
        let offsets = (0..n)
            .map(|j| matrix.mul_vec(&self.offsets[perm[j]]).into_iter().map(|v| -v).collect())
            .collect();
        Self { perm, matrix, offsets }
    }

    /// Image of an edge, before matching it against the stored edge list.
    pub fn image_edge(&self, e: &LabeledEdge) -> LabeledEdge {
        let moved = self.matrix.mul_vec(&e.label);
        let label = (0..moved.len())
            .map(|k| moved[k] + self.offsets[e.head][k] - self.offsets[e.tail][k])
            .collect();
        LabeledEdge::new(self.perm[e.tail], self.perm[e.head], label)
    }

    /// Image of `e`, returned as the stored edge it coincides with.
    pub fn apply_to_edge(&self, e: &LabeledEdge, g: &PeriodicGraph) -> Result<LabeledEdge> {
        let image = self.image_edge(e);
        g.find_edges(&image)
            .first()
            .map(|&k| g.edges()[k].clone())
            .ok_or_else(|| Error::InvalidAutomorphism(format!("image of edge {e:?} is not an edge")))
    }

    /// Permutation of edge indices induced on the stored edge list.
    /// Parallel copies of one bar are matched in order.
    pub fn edge_permutation(&self, g: &PeriodicGraph) -> Result<Vec<usize>> {
        self.check_shape(g)?;
        let mut slots: HashMap<LabeledEdge, VecDeque<usize>> = HashMap::new();
        for (k, e) in g.edges().iter().enumerate() {
            slots.entry(e.canonical()).or_default().push_back(k);
        }
        g.edges()
            .iter()
            .map(|e| {
                let key = self.image_edge(e).canonical();
                slots.get_mut(&key).and_then(VecDeque::pop_front).ok_or_else(|| {
                    Error::InvalidAutomorphism(format!("image of edge {e:?} is not an edge"))
                })
            })
            .collect()
    }

    fn check_shape(&self, g: &PeriodicGraph) -> Result<()> {
        if self.dim() != g.dim() || self.vertex_count() != g.vertex_count() {
            return Err(Error::DimensionMismatch(format!(
                "automorphism is for d={}, n={} but graph has d={}, n={}",
                self.dim(),
                self.vertex_count(),
                g.dim(),
                g.vertex_count()
            )));
        }
        Ok(())
    }

    /// Full consistency check against a graph.
    pub fn check(&self, g: &PeriodicGraph) -> Result<()> {
        self.edge_permutation(g).map(|_| ())
    }
}

pub fn automorphisms_from_json(source: &str) -> Result<Vec<Automorphism>> {
    let docs = match serde_json::from_str::<OneOrMany>(source)? {
        OneOrMany::One(d) => vec![d],
        OneOrMany::Many(ds) => ds,
    };
    docs.iter().map(Automorphism::from_document).collect()
}

pub fn automorphisms_to_json(list: &[Automorphism]) -> String {
    let docs: Vec<AutomorphismDocument> = list.iter().map(Automorphism::to_document).collect();
    serde_json::to_string_pretty(&docs).expect("automorphisms serialize")
}

/// Closure of `gens` modulo `Γ`, identity first, the rest sorted.
pub fn generate_group(gens: &[Automorphism], g: &PeriodicGraph) -> Result<Vec<Automorphism>> {
    for a in gens {
        a.check(g)?;
    }
    let identity = Automorphism::identity(g.dim(), g.vertex_count());
    let gens: Vec<Automorphism> = gens.iter().map(Automorphism::normalized).collect();
    let mut seen: HashSet<Automorphism> = HashSet::from([identity.clone()]);
    let mut queue = VecDeque::from([identity.clone()]);
    while let Some(x) = queue.pop_front() {
        for s in &gens {
            let y = s.compose(&x).normalized();
            if seen.insert(y.clone()) {
                if seen.len() > MAX_GROUP_ORDER {
                    return Err(Error::Precondition("generated group is too large or infinite".into()));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(sort_group(seen.into_iter().collect(), identity))
}

fn sort_group(mut elems: Vec<Automorphism>, identity: Automorphism) -> Vec<Automorphism> {
    elems.retain(|a| *a != identity);
    elems.sort();
    elems.insert(0, identity);
    elems
}

/// Every element of `Aut(G,Γ)/Γ`, normalized, identity first.
///
/// Backtracks over vertex-orbit permutations that preserve edge counts
/// between orbit pairs, then over images of the spanning-tree edges and of
/// `d` cotree edges whose cycle labels are independent. Those images fix `C`
/// (from the cycle labels) and the offsets (along the tree); each candidate
/// is then checked against the whole edge list.
pub fn enumerate_automorphisms(g: &PeriodicGraph, node_cap: usize) -> Result<Vec<Automorphism>> {
    let report = g.validate();
    if !report.is_valid() {
        return Err(Error::Precondition(format!(
            "automorphism enumeration needs a valid graph: {}",
            report.messages.join("; ")
        )));
    }
    let d = g.dim();
    let n = g.vertex_count();
    let tree = g.spanning_tree()?;
    let mut key_edges = Vec::new();
    let mut cycle_cols: Vec<Vec<i64>> = Vec::new();
    for &k in &tree.cotree_edges {
        let z = tree.cycle_label(&g.edges()[k]);
        let mut trial = cycle_cols.clone();
        trial.push(z);
        if IntMatrix::from_columns(d, &trial).to_rational().rank() == trial.len() {
            cycle_cols = trial;
            key_edges.push(k);
            if key_edges.len() == d {
                break;
            }
        }
    }
    let cycles_inv = IntMatrix::from_columns(d, &cycle_cols)
        .inverse_rational()
        .ok_or_else(|| Error::Internal("cycle labels do not span".into()))?;

    let mut pair_counts = vec![vec![0usize; n]; n];
    for e in g.edges() {
        pair_counts[e.tail][e.head] += 1;
        if !e.is_loop() {
            pair_counts[e.head][e.tail] += 1;
        }
    }

    let mut search = Search {
        g,
        tree: &tree,
        key_edges: &key_edges,
        cycles_inv: &cycles_inv,
        pair_counts: &pair_counts,
        nodes: 0,
        cap: node_cap,
        found: HashSet::new(),
    };
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search.permutations(0, &mut perm, &mut used)?;
    let identity = Automorphism::identity(d, n);
    Ok(sort_group(search.found.into_iter().collect(), identity))
}

struct Search<'a> {
    g: &'a PeriodicGraph,
    tree: &'a crate::graph::SpanningTree,
    key_edges: &'a [usize],
    cycles_inv: &'a RatMatrix,
    pair_counts: &'a [Vec<usize>],
    nodes: usize,
    cap: usize,
    found: HashSet<Automorphism>,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            Err(Error::SearchLimit(self.cap))
        } else {
            Ok(())
        }
    }

    fn permutations(&mut self, v: usize, perm: &mut [usize], used: &mut [bool]) -> Result<()> {
        let n = perm.len();
        if v == n {
            return self.edge_images(perm);
        }
        for c in 0..n {
            if used[c] {
                continue;
            }
            self.tick()?;
            let consistent = (0..=v).all(|a| {
                let pa = if a == v { c } else { perm[a] };
                self.pair_counts[a][v] == self.pair_counts[pa][c]
            });
            if !consistent {
                continue;
            }
            perm[v] = c;
            used[c] = true;
            self.permutations(v + 1, perm, used)?;
            used[c] = false;
            perm[v] = usize::MAX;
        }
        Ok(())
    }

    fn edge_images(&mut self, perm: &[usize]) -> Result<()> {
        let sequence: Vec<usize> =
            self.tree.attach_order.iter().chain(self.key_edges).copied().collect();
        let mut candidates = Vec::with_capacity(sequence.len());
        for &k in &sequence {
            let e = &self.g.edges()[k];
            let (pi, pj) = (perm[e.tail], perm[e.head]);
            let mut labels: Vec<Vec<i64>> = Vec::new();
            for f in self.g.edges() {
                if f.tail == pi && f.head == pj {
                    labels.push(f.label.clone());
                }
                if f.tail == pj && f.head == pi {
                    labels.push(f.label.iter().map(|v| -v).collect());
                }
            }
            labels.sort();
            labels.dedup();
            if labels.is_empty() {
                return Ok(());
            }
            candidates.push(labels);
        }
        let mut chosen = Vec::with_capacity(sequence.len());
        self.assign(perm, &sequence, &candidates, &mut chosen)
    }

    fn assign(
        &mut self,
        perm: &[usize],
        sequence: &[usize],
        candidates: &[Vec<Vec<i64>>],
        chosen: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        let depth = chosen.len();
        if depth == sequence.len() {
            self.finish(perm, sequence, chosen);
            return Ok(());
        }
        for label in &candidates[depth] {
            self.tick()?;
            chosen.push(label.clone());
            self.assign(perm, sequence, candidates, chosen)?;
            chosen.pop();
        }
        Ok(())
    }

    fn finish(&mut self, perm: &[usize], sequence: &[usize], images: &[Vec<i64>]) {
        let g = self.g;
        let d = g.dim();
        let n = g.vertex_count();
        let tree_len = self.tree.attach_order.len();
        // potentials of the image tree, rooted at perm[0]
        let mut image_pot: Vec<Option<Vec<i64>>> = vec![None; n];
        image_pot[0] = Some(vec![0; d]);
        for (&k, img) in sequence[..tree_len].iter().zip(images) {
            let e = &g.edges()[k];
            match (&image_pot[e.tail], &image_pot[e.head]) {
                (Some(p), None) => {
                    image_pot[e.head] = Some(p.iter().zip(img).map(|(a, b)| a + b).collect());
                }
                (None, Some(p)) => {
                    image_pot[e.tail] = Some(p.iter().zip(img).map(|(a, b)| a - b).collect());
                }
                _ => return,
            }
        }
        let image_pot: Vec<Vec<i64>> = image_pot.into_iter().map(Option::unwrap).collect();
        let image_cycles: Vec<Vec<Rational>> = sequence[tree_len..]
            .iter()
            .zip(&images[tree_len..])
            .map(|(&k, img)| {
                let e = &g.edges()[k];
                (0..d).map(|c| rat(image_pot[e.tail][c] + img[c] - image_pot[e.head][c])).collect()
            })
            .collect();
        let c = RatMatrix::from_columns(d, &image_cycles).mul(self.cycles_inv);
        let Some(c) = c.to_integer() else { return };
        if c.det().abs() != 1 {
            return;
        }
        let offsets: Vec<Vec<i64>> = (0..n)
            .map(|v| {
                let moved = c.mul_vec(&self.tree.potentials[v]);
                image_pot[v].iter().zip(moved).map(|(a, b)| a - b).collect()
            })
            .collect();
        let candidate = Automorphism { perm: perm.to_vec(), matrix: c, offsets };
        if candidate.edge_permutation(g).is_ok() {
            self.found.insert(candidate);
        }
    }
}

/// Affine map `x ↦ linear·x + shift` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub linear: RatMatrix,
    pub shift: Vec<Rational>,
}

/// Floating-point copy of an [`AffineMap`] for repeated evaluation.
#[derive(Clone, Debug)]
pub struct AffineMapF64 {
    pub linear: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl AffineMapF64 {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.linear * DVector::from_column_slice(x) + &self.shift;
        y.iter().copied().collect()
    }

    /// Whether `x` is fixed up to `tol` in every coordinate.
    pub fn fixes(&self, x: &[f64], tol: f64) -> bool {
        self.apply(x).iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        Self { linear: RatMatrix::identity(dim), shift: vec![Rational::zero(); dim] }
    }

    pub fn input_dim(&self) -> usize {
        self.linear.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.rows()
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.linear.mul_vec(x).into_iter().zip(&self.shift).map(|(a, b)| a + b).collect()
    }

    pub fn to_f64(&self) -> AffineMapF64 {
        AffineMapF64 {
            linear: self.linear.to_f64(),
            shift: DVector::from_iterator(self.shift.len(), self.shift.iter().map(exact::rat_to_f64)),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let linear = self.linear.mul(&other.linear);
        let shift = self.apply(&other.shift);
        Self { linear, shift }
    }

    pub fn is_identity(&self) -> bool {
        self.linear.is_identity() && exact::is_zero_vec(&self.shift)
    }
}

/// The affine map `A(σ)` on `(t_1, …, t_{n-1}, ω)`.
pub fn affine_action(a: &Automorphism, g: &PeriodicGraph) -> Result<AffineMap> {
    a.check_shape(g)?;
    let d = g.dim();
    let n = g.vertex_count();
    let big_n = g.parameter_dim();
    let t_cols = d * (n - 1);
    let c = a.matrix();
    let c_inv = c.inverse_unimodular().ok_or_else(|| Error::InvalidAutomorphism("C is not unimodular".into()))?;
    let inv = a.inverse();
    let pinv = inv.perm();
    let mut linear = RatMatrix::zeros(big_n, big_n);
    let mut shift = vec![Rational::zero(); big_n];

    let z = pinv[0];
    for j in 1..n {
        let src = pinv[j];
        for r in 0..d {
            let row = (j - 1) * d + r;
            for k in 0..d {
                let coef = c.get(r, k);
                if coef == 0 {
                    continue;
                }
                if src > 0 {
                    let col = (src - 1) * d + k;
                    let v = linear.get(row, col) + rat(coef);
                    linear.set(row, col, v);
                }
                if z > 0 {
                    let col = (z - 1) * d + k;
                    let v = linear.get(row, col) - rat(coef);
                    linear.set(row, col, v);
                }
            }
            shift[row] = rat(a.offsets()[z][r] - a.offsets()[src][r]);
        }
    }

    // ω̃ = Dᵗ ω D with D = C⁻¹
    for p in 0..d {
        for q in p..d {
            let row = t_cols + upper_index(d, p, q);
            for s in 0..d {
                for u in s..d {
                    let coef = if s == u {
                        c_inv.get(s, p) * c_inv.get(s, q)
                    } else {
                        c_inv.get(s, p) * c_inv.get(u, q) + c_inv.get(u, p) * c_inv.get(s, q)
                    };
                    if coef != 0 {
                        linear.set(row, t_cols + upper_index(d, s, u), rat(coef));
                    }
                }
            }
        }
    }
    Ok(AffineMap { linear, shift })
}

/// Affine subspace `base + span(directions)` of parameter space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspace {
    pub base: Vec<Rational>,
    /// `N × r`, full column rank.
    pub directions: RatMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineSubspaceDocument {
    pub dimension: usize,
    pub base: Vec<String>,
    pub directions: Vec<Vec<String>>,
}

impl AffineSubspace {
    pub fn full(dim: usize) -> Self {
        Self { base: vec![Rational::zero(); dim], directions: RatMatrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.directions.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn contains_point(&self, x: &[Rational]) -> bool {
        let diff: Vec<Rational> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        self.directions.spans(&diff)
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &AffineSubspace) -> bool {
        self.contains_point(&other.base)
            && other.directions.columns().iter().all(|v| self.directions.spans(v))
    }

    pub fn base_f64(&self) -> Vec<f64> {
        self.base.iter().map(exact::rat_to_f64).collect()
    }

    pub fn directions_f64(&self) -> DMatrix<f64> {
        self.directions.to_f64()
    }

    pub fn to_document(&self) -> AffineSubspaceDocument {
        AffineSubspaceDocument {
            dimension: self.dim(),
            base: self.base.iter().map(exact::rat_to_string).collect(),
            directions: self
                .directions
                .columns()
                .iter()
                .map(|c| c.iter().map(exact::rat_to_string).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: &AffineSubspaceDocument) -> Result<Self> {
        let parse = |s: &String| {
            exact::rat_from_str(s).ok_or_else(|| Error::Parse(format!("bad rational {s:?}")))
        };
        let base: Vec<Rational> = doc.base.iter().map(parse).collect::<Result<_>>()?;
        let cols: Vec<Vec<Rational>> = doc
            .directions
            .iter()
            .map(|c| c.iter().map(parse).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        if cols.iter().any(|c| c.len() != base.len()) {
            return Err(Error::Parse("direction length differs from base".into()));
        }
        let directions = RatMatrix::from_columns(base.len(), &cols);
        if directions.rank() != cols.len() || cols.len() != doc.dimension {
            return Err(Error::Parse("directions are not independent".into()));
        }
        Ok(Self { base, directions })
    }
}

#[derive(Clone, Debug)]
pub struct FixedLocus {
    pub locus: AffineSubspace,
    /// The generated subgroup of `Aut(G,Γ)/Γ`, identity first.
    pub group: Vec<Automorphism>,
    /// Whether `ω` at the base point is positive definite (exact test).
    pub base_positive_definite: bool,
}

/// `F(Σ)` for the subgroup generated by `gens`.
///
/// The base point is the orbit barycenter of the standard point `t = 0`,
/// `ω = I`, so it lies in the locus and has positive definite `ω`.
pub fn fixed_locus(gens: &[Automorphism], g: &PeriodicGraph) -> Result<FixedLocus> {
    let group = generate_group(gens, g)?;
    let big_n = g.parameter_dim();
    let maps: Vec<AffineMap> =
        group.iter().map(|a| affine_action(a, g)).collect::<Result<_>>()?;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for m in maps.iter().skip(1) {
        for r in 0..big_n {
            let row: Vec<Rational> = (0..big_n)
                .map(|c| if r == c { m.linear.get(r, c) - Rational::one() } else { m.linear.get(r, c).clone() })
                .collect();
            if row.iter().all(Zero::is_zero) && m.shift[r].is_zero() {
                continue;
            }
            rows.push(row);
            rhs.push(-m.shift[r].clone());
        }
    }
    let start = standard_point_exact(g);
    let base = average_images(&maps, &start);
    let directions = if rows.is_empty() {
        RatMatrix::identity(big_n)
    } else {
        let mut system = RatMatrix::zeros(rows.len(), big_n);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                system.set(r, c, v.clone());
            }
        }
        if system.solve(&rhs).is_none() {
            return Err(Error::Internal("fixed-point system is inconsistent".into()));
        }
        if system.mul_vec(&base) != rhs {
            return Err(Error::Internal("orbit barycenter is not fixed".into()));
        }
        system.nullspace()
    };
    let base_positive_definite = omega_positive_definite_exact(g, &base);
    Ok(FixedLocus { locus: AffineSubspace { base, directions }, group, base_positive_definite })
}

fn standard_point_exact(g: &PeriodicGraph) -> Vec<Rational> {
    let d = g.dim();
    let t_cols = d * (g.vertex_count() - 1);
    let mut x = vec![Rational::zero(); g.parameter_dim()];
    for a in 0..d {
        x[t_cols + upper_index(d, a, a)] = Rational::one();
    }
    x
}

fn average_images(maps: &[AffineMap], x: &[Rational]) -> Vec<Rational> {
    let mut sum = vec![Rational::zero(); x.len()];
    for m in maps {
        for (s, v) in sum.iter_mut().zip(m.apply(x)) {
            *s += v;
        }
    }
    let k = rat(maps.len() as i64);
    sum.into_iter().map(|s| s / &k).collect()
}

/// Sylvester's criterion on the `ω` block of an exact parameter vector.
pub fn omega_positive_definite_exact(g: &PeriodicGraph, x: &[Rational]) -> bool {
    let d = g.dim();
    let t_cols = d * (g.vertex_count() - 1);
    let mut m = RatMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m.set(a, b, x[t_cols + upper_index(d, a.min(b), a.max(b))].clone());
        }
    }
    // leading pivots of Gaussian elimination without pivoting
    for k in 0..d {
        let p = m.get(k, k).clone();
        if !p.is_positive() {
            return false;
        }
        for i in k + 1..d {
            let f = m.get(i, k) / &p;
            for j in k..d {
                let v = m.get(i, j) - &f * m.get(k, j);
                m.set(i, j, v);
            }
        }
    }
    true
}

/// Orbit average of an exact parameter vector over a finite group.
pub fn barycenter_exact(group: &[Automorphism], g: &PeriodicGraph, x: &[Rational]) -> Result<Vec<Rational>> {
    let maps: Vec<AffineMap> = group.iter().map(|a| affine_action(a, g)).collect::<Result<_>>()?;
    Ok(average_images(&maps, x))
}

/// Orbit barycenter of `start` under the group generated by `gens`.
pub fn barycenter_point(
    gens: &[Automorphism],
    g: &PeriodicGraph,
    start: &PlacementParams,
    pd_tol: f64,
) -> Result<PlacementParams> {
    let group = generate_group(gens, g)?;
    let x: Vec<Rational> = start.to_vector().into_iter().map(exact::rat_from_f64).collect();
    let y = barycenter_exact(&group, g, &x)?;
    let y: Vec<f64> = y.iter().map(exact::rat_to_f64).collect();
    PlacementParams::from_vector(g.dim(), g.vertex_count(), &y, pd_tol)
}

fn check_params(a: &Automorphism, params: &PlacementParams, g: &PeriodicGraph) -> Result<()> {
    a.check_shape(g)?;
    if params.dim() != g.dim() || params.vertex_count() != g.vertex_count() {
        return Err(Error::DimensionMismatch("params do not match graph".into()));
    }
    Ok(())
}

fn int_vec(v: &[i64]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| x as f64))
}

fn int_mat(m: &IntMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) as f64)
}

/// Whether `a` is realized by an isometry of the placement: `Cᵗ ω C = ω`
/// and `t_{perm(i)} + n_i − C t_i` independent of `i`, both to `sym_tol`.
pub fn is_symmetry(a: &Automorphism, params: &PlacementParams, g: &PeriodicGraph, sym_tol: f64) -> Result<bool> {
    check_params(a, params, g)?;
    let c = int_mat(a.matrix());
    let omega = params.omega();
    if (c.transpose() * &omega * &c - &omega).amax() > sym_tol {
        return Ok(false);
    }
    let residual = |i: usize| params.shift(a.perm()[i]) + int_vec(&a.offsets()[i]) - &c * params.shift(i);
    let r0 = residual(0);
    Ok((1..g.vertex_count()).all(|i| (residual(i) - &r0).amax() <= sym_tol))
}

/// Euclidean isometry `x ↦ S x + t` realizing a symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryWitness {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl IsometryWitness {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.translation
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.linear.nrows();
        (self.linear.transpose() * &self.linear - DMatrix::identity(n, n)).amax()
    }
}

/// `S = Λ C Λ⁻¹` and `t = p(σ v_0)` for the canonical realization.
pub fn realize_isometry(
    a: &Automorphism,
    params: &PlacementParams,
    g: &PeriodicGraph,
    tol: &crate::Tolerances,
) -> Result<IsometryWitness> {
    if !is_symmetry(a, params, g, tol.sym_tol)? {
        return Err(Error::Precondition("automorphism is not a symmetry of this placement".into()));
    }
    let raw = placement::realize(params, tol.pd_tol)?;
    let lattice_inv = raw.lattice.clone().try_inverse().ok_or(Error::SingularLattice)?;
    let linear = &raw.lattice * int_mat(a.matrix()) * lattice_inv;
    let translation = raw.position(a.perm()[0], &a.offsets()[0]) - &linear * &raw.points[0];
    Ok(IsometryWitness { linear, translation })
}

/// Partition of edge indices into orbits of the generated group.
pub fn edge_orbit_quotient(gens: &[Automorphism], g: &PeriodicGraph) -> Result<Vec<Vec<usize>>> {
    let m = g.edge_count();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in gens {
        for (r, s) in a.edge_permutation(g)?.into_iter().enumerate() {
            let (x, y) = (find(&mut parent, r), find(&mut parent, s));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        }
    }
    let mut classes: Vec<BTreeSet<usize>> = Vec::new();
    let mut slot = HashMap::new();
    for r in 0..m {
        let root = find(&mut parent, r);
        let idx = *slot.entry(root).or_insert_with(|| {
            classes.push(BTreeSet::new());
            classes.len() - 1
        });
        classes[idx].insert(r);
    }
    Ok(classes.into_iter().map(|c| c.into_iter().collect()).collect())
}

/// `ω` block of an exact parameter vector as floats.
pub(crate) fn omega_of(g: &PeriodicGraph, x: &[f64]) -> DMatrix<f64> {
    let d = g.dim();
    placement::omega_from_upper(d, &x[d * (g.vertex_count() - 1)..d * (g.vertex_count() - 1) + upper_len(d)])
}

/// Smallest eigenvalue of `ω` at a raw parameter vector.
/// Smallest eigenvalue of the `ω` block of a parameter vector.
pub fn omega_min_eigenvalue(g: &PeriodicGraph, x: &[f64]) -> f64 {
    linalg::min_eigenvalue(&omega_of(g, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::nets;

    pub(crate) fn quarter_turn() -> Automorphism {
        Automorphism::new(vec![0], IntMatrix::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap(), vec![vec![0, 0]])
            .unwrap()
    }

    fn x_reflection() -> Automorphism {
        Automorphism::new(vec![0], IntMatrix::from_rows(&[vec![-1, 0], vec![0, 1]]).unwrap(), vec![vec![0, 0]])
            .unwrap()
    }

    #[test]
    fn compose_and_inverse() {
        let r = quarter_turn();
        let id = Automorphism::identity(2, 1);
        assert_eq!(id.compose(&r), r);
        assert!(r.compose(&r.inverse()).is_identity());
        assert_eq!(r.compose(&r).matrix().to_rows(), vec![vec![-1, 0], vec![0, -1]]);
    }

    #[test]
    fn quarter_turn_on_edges() {
        let g = nets::square();
        let r = quarter_turn();
        let e0 = &g.edges()[0];
        let e1 = &g.edges()[1];
        assert_eq!(r.apply_to_edge(e0, &g).unwrap(), LabeledEdge::new(0, 0, vec![0, 1]));
        assert_eq!(r.image_edge(e1), LabeledEdge::new(0, 0, vec![-1, 0]));
        assert_eq!(r.apply_to_edge(e1, &g).unwrap(), LabeledEdge::new(0, 0, vec![1, 0]));
        assert_eq!(r.edge_permutation(&g).unwrap(), vec![1, 0]);
        assert_eq!(Automorphism::identity(2, 1).apply_to_edge(e0, &g).unwrap(), *e0);
    }

    #[test]
    fn invalid_automorphism_detected() {
        let shear = Automorphism::new(
            vec![0],
            IntMatrix::from_rows(&[vec![1, 1], vec![0, 1]]).unwrap(),
            vec![vec![0, 0]],
        )
        .unwrap();
        assert!(shear.check(&nets::square()).is_err());
        assert!(Automorphism::new(vec![0], IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap(), vec![vec![0, 0]])
            .is_err());
    }

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_automorphisms(&nets::square(), 1_000_000).unwrap().len(), 8);
        assert_eq!(enumerate_automorphisms(&nets::honeycomb(), 1_000_000).unwrap().len(), 12);
        assert_eq!(enumerate_automorphisms(&nets::cubic(), 1_000_000).unwrap().len(), 48);
        let generic = PeriodicGraph::new(
            2,
            2,
            vec![
                LabeledEdge::new(0, 1, vec![0, 0]),
                LabeledEdge::new(0, 0, vec![1, 0]),
                LabeledEdge::new(1, 1, vec![0, 1]),
                LabeledEdge::new(0, 1, vec![1, 0]),
                LabeledEdge::new(0, 1, vec![0, 2]),
            ],
            None,
        )
        .unwrap();
        assert_eq!(enumerate_automorphisms(&generic, 1_000_000).unwrap().len(), 1);
        // Two bars {0, (2,3)} between the orbits are swapped by a point inversion.
        let centro = PeriodicGraph::new(
            2,
            2,
            vec![
                LabeledEdge::new(0, 1, vec![0, 0]),
                LabeledEdge::new(0, 0, vec![1, 0]),
                LabeledEdge::new(1, 1, vec![0, 1]),
                LabeledEdge::new(0, 1, vec![2, 3]),
            ],
            None,
        )
        .unwrap();
        assert_eq!(enumerate_automorphisms(&centro, 1_000_000).unwrap().len(), 2);
    }

    #[test]
    fn search_cap_enforced() {
        assert!(matches!(enumerate_automorphisms(&nets::cubic(), 10), Err(Error::SearchLimit(10))));
    }

    #[test]
    fn quarter_turn_action_on_omega() {
        let g = nets::square();
        let a = affine_action(&quarter_turn(), &g).unwrap();
        let x = vec![rat(2), rat(5), rat(7)];
        assert_eq!(a.apply(&x), vec![rat(7), rat(-5), rat(2)]);
        assert!(affine_action(&Automorphism::identity(2, 1), &g).unwrap().is_identity());
        let hc = nets::honeycomb();
        let tr = Automorphism::translation(2, &[3, -1]);
        assert!(affine_action(&tr, &hc).unwrap().is_identity());
    }

    #[test]
    fn is_symmetry_examples() {
        let g = nets::square();
        let r = quarter_turn();
        let unit = PlacementParams::standard(2, 1);
        assert!(is_symmetry(&r, &unit, &g, 1e-9).unwrap());
        let skew = PlacementParams::new(2, vec![], vec![1.0, 0.0, 2.0], 1e-10).unwrap();
        assert!(!is_symmetry(&r, &skew, &g, 1e-9).unwrap());
        let hc = nets::honeycomb();
        let p = PlacementParams::new(2, vec![DVector::from_column_slice(&[0.3, 0.1])], vec![1.5, 0.2, 0.7], 1e-10)
            .unwrap();
        assert!(is_symmetry(&Automorphism::translation(2, &[1, 4]), &p, &hc, 1e-9).unwrap());
    }

    #[test]
    fn isometry_witnesses() {
        let g = nets::square();
        let tol = crate::Tolerances::default();
        let unit = PlacementParams::standard(2, 1);
        let w = realize_isometry(&Automorphism::identity(2, 1), &unit, &g, &tol).unwrap();
        assert_eq!(w.linear, DMatrix::identity(2, 2));
        assert_eq!(w.translation, DVector::zeros(2));
        let w = realize_isometry(&quarter_turn(), &unit, &g, &tol).unwrap();
        assert_eq!(w.linear, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let skew = PlacementParams::new(2, vec![], vec![1.0, 0.0, 2.0], 1e-10).unwrap();
        assert!(matches!(realize_isometry(&quarter_turn(), &skew, &g, &tol), Err(Error::Precondition(_))));
    }

    #[test]
    fn honeycomb_swap_isometry() {
        let hc = nets::honeycomb();
        let group = enumerate_automorphisms(&hc, 1_000_000).unwrap();
        let swap = group.iter().find(|a| a.perm() == [1, 0]).unwrap().clone();
        let tol = crate::Tolerances::default();
        let start = PlacementParams::new(2, vec![DVector::from_column_slice(&[0.2, 0.4])], vec![1.0, 0.3, 2.0], 1e-10)
            .unwrap();
        let sym = barycenter_point(std::slice::from_ref(&swap), &hc, &start, 1e-10).unwrap();
        let w = realize_isometry(&swap, &sym, &hc, &tol).unwrap();
        let s2 = &w.linear * &w.linear;
        assert!((s2 - DMatrix::identity(2, 2)).amax() < 1e-9);
        let raw = placement::realize(&sym, 1e-10).unwrap();
        assert!((&w.translation - &raw.points[1]).amax() < 1e-12);
        assert!(w.orthogonality_defect() < 1e-9);
    }

    #[test]
    fn quarter_turn_locus() {
        let g = nets::square();
        assert_eq!(fixed_locus(&[], &g).unwrap().locus.dim(), 3);
        let f = fixed_locus(&[quarter_turn()], &g).unwrap();
        assert_eq!(f.group.len(), 4);
        assert_eq!(f.locus.dim(), 1);
        assert_eq!(f.locus.directions.column(0), vec![rat(1), rat(0), rat(1)]);
        assert_eq!(f.locus.base, vec![rat(1), rat(0), rat(1)]);
        assert!(f.base_positive_definite);
    }

    #[test]
    fn barycenter_of_quarter_turn() {
        let g = nets::square();
        let start = PlacementParams::new(2, vec![], vec![1.0, 0.0, 3.0], 1e-10).unwrap();
        assert_eq!(barycenter_point(&[], &g, &start, 1e-10).unwrap(), start);
        let b = barycenter_point(&[quarter_turn()], &g, &start, 1e-10).unwrap();
        assert_eq!(b.omega_upper(), &[2.0, 0.0, 2.0]);
        assert!(is_symmetry(&quarter_turn(), &b, &g, 1e-9).unwrap());
    }

    #[test]
    fn edge_orbits() {
        let g = nets::square();
        assert_eq!(edge_orbit_quotient(&[], &g).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(edge_orbit_quotient(&[quarter_turn()], &g).unwrap(), vec![vec![0, 1]]);
        assert_eq!(edge_orbit_quotient(&[x_reflection()], &g).unwrap(), vec![vec![0], vec![1]]);
        let hc = nets::honeycomb();
        let group = enumerate_automorphisms(&hc, 1_000_000).unwrap();
        assert_eq!(edge_orbit_quotient(&group, &hc).unwrap(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn documents() {
        let r = quarter_turn();
        let json = automorphisms_to_json(std::slice::from_ref(&r));
        assert_eq!(automorphisms_from_json(&json).unwrap(), vec![r.clone()]);
        let single = serde_json::to_string(&r.to_document()).unwrap();
        assert_eq!(automorphisms_from_json(&single).unwrap(), vec![r]);
        let loc = fixed_locus(&[quarter_turn()], &nets::square()).unwrap().locus;
        assert_eq!(AffineSubspace::from_document(&loc.to_document()).unwrap(), loc);
    }
}
