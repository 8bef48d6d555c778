//! Relaxing periodicity to a sublattice `Γ̃ = M Z^d ⊂ Γ`, and intersecting
//! symmetry groups.

use std::collections::{HashMap, HashSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, rat, IntMatrix, RatMatrix, Rational};
use crate::graph::{LabeledEdge, PeriodicGraph};
use crate::placement::{upper_index, upper_len, PlacementParams};
use crate::symmetry::{generate_group, Automorphism};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublatticeMap {
    matrix: IntMatrix,
    index: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SublatticeDocument {
    #[serde(rename = "M")]
    pub matrix: Vec<Vec<i64>>,
}

impl SublatticeMap {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(Error::DimensionMismatch("sublattice matrix must be square".into()));
        }
        let det = matrix.det();
        if det == 0 {
            return Err(Error::SingularLattice);
        }
        Ok(Self { matrix, index: det.unsigned_abs() })
    }

    pub fn scalar(dim: usize, k: i64) -> Self {
        let mut m = IntMatrix::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, k);
        }
        Self::new(m).expect("nonzero scalar")
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let doc: SublatticeDocument = serde_json::from_str(source)?;
        let m = IntMatrix::from_rows(&doc.matrix).ok_or_else(|| Error::Parse("ragged matrix M".into()))?;
        Self::new(m)
    }

    pub fn to_document(&self) -> SublatticeDocument {
        SublatticeDocument { matrix: self.matrix.to_rows() }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `k = |det M|`.
    pub fn index(&self) -> u64 {
        self.index
    }
}

/// Canonical representatives of `Z^d / M Z^d`, `reps[0] = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetReps {
    pub reps: Vec<Vec<i64>>,
    hnf: IntMatrix,
    hnf_inv: RatMatrix,
    m_inv: RatMatrix,
    lookup: HashMap<Vec<i64>, usize>,
}

impl CosetReps {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Splits `v = reps[j] + M·q`, returning `(j, q)`.
    pub fn locate(&self, v: &[i64]) -> (usize, Vec<i64>) {
        let rv: Vec<Rational> = v.iter().map(|&x| rat(x)).collect();
        let s = self.hnf_inv.mul_vec(&rv);
        let frac: Vec<Rational> = s.iter().map(|x| x - x.floor()).collect();
        let rep = exact::rat_vec_to_int(&self.hnf.to_rational().mul_vec(&frac)).expect("integral point");
        let j = *self.lookup.get(&rep).expect("representative in the fundamental domain");
        let diff: Vec<Rational> = v.iter().zip(&rep).map(|(a, b)| rat(a - b)).collect();
        let q = exact::rat_vec_to_int(&self.m_inv.mul_vec(&diff)).expect("difference lies in M Z^d");
        (j, q)
    }
}

/// Integer points of the half-open parallelepiped spanned by the Hermite
/// normal form of `M`, ordered with the last coordinate most significant.
pub fn coset_representatives(m: &SublatticeMap, cap: u64) -> Result<CosetReps> {
    if m.index() > cap {
        return Err(Error::Precondition(format!("sublattice index {} exceeds cap {cap}", m.index())));
    }
    let d = m.dim();
    let hnf = m.matrix.column_hnf().ok_or(Error::SingularLattice)?;
    let mut reps = Vec::with_capacity(m.index() as usize);
    let mut point = vec![0i64; d];
    let mut coeffs = vec![Rational::zero(); d];
    fill_parallelepiped(&hnf, d, &mut point, &mut coeffs, &mut reps);
    reps.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    if reps.len() as u64 != m.index() || reps[0].iter().any(|&v| v != 0) {
        return Err(Error::Internal("coset enumeration mismatch".into()));
    }
    let lookup = reps.iter().enumerate().map(|(j, r)| (r.clone(), j)).collect();
    Ok(CosetReps {
        reps,
        hnf_inv: hnf.inverse_rational().expect("nonsingular"),
        m_inv: m.matrix.inverse_rational().expect("nonsingular"),
        hnf,
        lookup,
    })
}

/// Back-substitution over the upper-triangular HNF: fixes coordinates from
/// the last one down, each ranging over `H[i][i]` consecutive integers.
fn fill_parallelepiped(
    h: &IntMatrix,
    remaining: usize,
    point: &mut Vec<i64>,
    coeffs: &mut Vec<Rational>,
    out: &mut Vec<Vec<i64>>,
) {
    if remaining == 0 {
        out.push(point.clone());
        return;
    }
    let i = remaining - 1;
    let d = h.rows();
    let mut c = Rational::zero();
    for j in i + 1..d {
        c += rat(h.get(i, j)) * &coeffs[j];
    }
    let lo = c.ceil().to_integer();
    let lo: i64 = i64::try_from(lo).expect("small coordinates");
    let hii = h.get(i, i);
    for x in lo..lo + hii {
        point[i] = x;
        coeffs[i] = (rat(x) - &c) / rat(hii);
        fill_parallelepiped(h, i, point, coeffs, out);
    }
}

/// Relaxed graph together with its bookkeeping.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub graph: PeriodicGraph,
    /// New vertex orbit `i·k + j` ↦ `(i, j)`: original orbit and coset.
    pub vertex_map: Vec<(usize, usize)>,
    /// New edge orbit `e·k + j` ↦ `(e, j)`.
    pub edge_map: Vec<(usize, usize)>,
    pub cosets: CosetReps,
    pub sublattice: SublatticeMap,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub index: u64,
    pub vertex_map: Vec<[usize; 2]>,
    pub edge_map: Vec<[usize; 2]>,
    pub coset_representatives: Vec<Vec<i64>>,
}

impl Relaxation {
    pub fn report(&self) -> RelaxationReport {
        RelaxationReport {
            index: self.sublattice.index(),
            vertex_map: self.vertex_map.iter().map(|&(a, b)| [a, b]).collect(),
            edge_map: self.edge_map.iter().map(|&(a, b)| [a, b]).collect(),
            coset_representatives: self.cosets.reps.clone(),
        }
    }

    /// Translation by `gamma ∈ Γ`, seen as an automorphism of the relaxed graph.
    pub fn lattice_translation(&self, gamma: &[i64]) -> Automorphism {
        let k = self.cosets.len();
        let n = self.graph.vertex_count() / k;
        let mut perm = vec![0; n * k];
        let mut offsets = vec![Vec::new(); n * k];
        for i in 0..n {
            for (j, nu) in self.cosets.reps.iter().enumerate() {
                let moved: Vec<i64> = nu.iter().zip(gamma).map(|(a, b)| a + b).collect();
                let (j2, q) = self.cosets.locate(&moved);
                perm[i * k + j] = i * k + j2;
                offsets[i * k + j] = q;
            }
        }
        Automorphism::new(perm, IntMatrix::identity(gamma.len()), offsets).expect("translation is well formed")
    }
}

/// Graph over `Γ̃`: vertex orbits `v_i + ν_j`, edge orbits `e + ν_j`.
pub fn relax_graph(g: &PeriodicGraph, m: &SublatticeMap, cap: u64) -> Result<Relaxation> {
    if m.dim() != g.dim() {
        return Err(Error::DimensionMismatch("sublattice and graph dimensions differ".into()));
    }
    g.require_valid()?;
    let cosets = coset_representatives(m, cap)?;
    let k = cosets.len();
    let mut edges = Vec::with_capacity(g.edge_count() * k);
    let mut edge_map = Vec::with_capacity(g.edge_count() * k);
    for (ei, e) in g.edges().iter().enumerate() {
        for (j1, nu) in cosets.reps.iter().enumerate() {
            let reach: Vec<i64> = nu.iter().zip(&e.label).map(|(a, b)| a + b).collect();
            let (j2, label) = cosets.locate(&reach);
            edges.push(LabeledEdge::new(e.tail * k + j1, e.head * k + j2, label));
            edge_map.push((ei, j1));
        }
    }
    let vertex_map = (0..g.vertex_count()).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let names = g.names().map(|names| {
        names.iter().flat_map(|s| (0..k).map(move |j| format!("{s}+nu{j}"))).collect()
    });
    let graph = PeriodicGraph::new(g.dim(), g.vertex_count() * k, edges, names)?;
    Ok(Relaxation { graph, vertex_map, edge_map, cosets, sublattice: m.clone() })
}

/// `ω̃ = Mᵗ ω M`, `t̃_{ij} = M⁻¹(t_i + ν_j)` on exact parameter vectors.
pub fn relax_params_exact(x: &[Rational], m: &SublatticeMap, g: &PeriodicGraph, cap: u64) -> Result<Vec<Rational>> {
    if x.len() != g.parameter_dim() || m.dim() != g.dim() {
        return Err(Error::DimensionMismatch("parameter vector does not match graph".into()));
    }
    let d = g.dim();
    let n = g.vertex_count();
    let cosets = coset_representatives(m, cap)?;
    let k = cosets.len();
    let m_inv = m.matrix.inverse_rational().ok_or(Error::SingularLattice)?;
    let t_cols = d * (n - 1);
    let shift = |i: usize| -> Vec<Rational> {
        if i == 0 { vec![Rational::zero(); d] } else { x[(i - 1) * d..i * d].to_vec() }
    };
    let mut out = Vec::with_capacity(d * (n * k - 1) + upper_len(d));
    for i in 0..n {
        for (j, nu) in cosets.reps.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            let v: Vec<Rational> = shift(i).into_iter().zip(nu).map(|(a, &b)| a + rat(b)).collect();
            out.extend(m_inv.mul_vec(&v));
        }
    }
    let mm = m.matrix.to_rational();
    let omega = RatMatrix::from_columns(
        d,
        &(0..d)
            .map(|b| (0..d).map(|a| x[t_cols + upper_index(d, a.min(b), a.max(b))].clone()).collect())
            .collect::<Vec<_>>(),
    );
    let mut mt = RatMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            mt.set(a, b, mm.get(b, a).clone());
        }
    }
    let relaxed = mt.mul(&omega).mul(&mm);
    for a in 0..d {
        for b in a..d {
            out.push(relaxed.get(a, b).clone());
        }
    }
    Ok(out)
}

/// Parameters of the same placement seen as `Γ̃`-periodic.
pub fn relax_params(
    params: &PlacementParams,
    m: &SublatticeMap,
    g: &PeriodicGraph,
    cap: u64,
    pd_tol: f64,
) -> Result<PlacementParams> {
    if params.dim() != g.dim() || params.vertex_count() != g.vertex_count() {
        return Err(Error::DimensionMismatch("params do not match graph".into()));
    }
    let x: Vec<Rational> = params.to_vector().into_iter().map(exact::rat_from_f64).collect();
    let y = relax_params_exact(&x, m, g, cap)?;
    let y: Vec<f64> = y.iter().map(exact::rat_to_f64).collect();
    let k = m.index() as usize;
    PlacementParams::from_vector(g.dim(), g.vertex_count() * k, &y, pd_tol)
}

/// Common subgroup of two symmetry groups (each given by generators or as a
/// full list), as a list of normalized elements, identity first.
pub fn intersect_symmetry_groups(
    first: &[Automorphism],
    second: &[Automorphism],
    g: &PeriodicGraph,
) -> Result<Vec<Automorphism>> {
    let a = generate_group(first, g)?;
    let b: HashSet<Automorphism> = generate_group(second, g)?.into_iter().collect();
    Ok(a.into_iter().filter(|x| b.contains(x)).collect())
}

/// Lengths of relaxed edges pulled back through the edge map.
pub fn pull_back_lengths(relaxation: &Relaxation, relaxed: &[f64]) -> Vec<Vec<f64>> {
    let m = relaxation.edge_map.iter().map(|&(e, _)| e).max().map_or(0, |e| e + 1);
    let mut out = vec![Vec::new(); m];
    for (&(e, _), &v) in relaxation.edge_map.iter().zip(relaxed) {
        out[e].push(v);
    }
    out
}
