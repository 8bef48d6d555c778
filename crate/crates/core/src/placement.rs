//! Placements modulo isometry.
//!
//! A periodic placement is recorded by the vertex positions of the orbit
//! representatives and a lattice basis `Λ` (columns). Isometries are factored
//! out by passing to arithmetic shift vectors `t_i = Λ⁻¹(p(v_i) − p(v_0))` and
//! the Gram matrix `ω = ΛᵗΛ`. The parameter vector layout used everywhere is
//! `t_1, …, t_{n-1}` component-wise, followed by the upper triangle of `ω`
//! row by row.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PeriodicGraph;
use crate::linalg;

/// Position of `ω[a][b]` (`a <= b`) in the packed upper triangle.
pub fn upper_index(dim: usize, a: usize, b: usize) -> usize {
    debug_assert!(a <= b && b < dim);
    a * dim - a * a.saturating_sub(1) / 2 + (b - a)
}

pub fn upper_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Parameter-space coordinates with `t_0 ≡ 0` implied.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementParams {
    dim: usize,
    shifts: Vec<DVector<f64>>,
    omega_upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub t: Vec<Vec<f64>>,
    pub omega_upper: Vec<f64>,
}

impl PlacementParams {
    /// Checked constructor; `omega_upper` must be positive definite at `pd_tol`.
    pub fn new(dim: usize, shifts: Vec<DVector<f64>>, omega_upper: Vec<f64>, pd_tol: f64) -> Result<Self> {
        if omega_upper.len() != upper_len(dim) {
            return Err(Error::DimensionMismatch(format!(
                "omega_upper has {} entries, expected {}",
                omega_upper.len(),
                upper_len(dim)
            )));
        }
        if let Some(t) = shifts.iter().find(|t| t.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "shift vector of length {}, expected {dim}",
                t.len()
            )));
        }
        if shifts.iter().flat_map(|t| t.iter()).chain(&omega_upper).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite parameter".into()));
        }
        let params = Self { dim, shifts, omega_upper };
        if linalg::cholesky_upper(&params.omega(), pd_tol).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(params)
    }

    /// `t = 0`, `ω = I`.
    pub fn standard(dim: usize, vertex_count: usize) -> Self {
        let mut omega_upper = vec![0.0; upper_len(dim)];
        for a in 0..dim {
            omega_upper[upper_index(dim, a, a)] = 1.0;
        }
        Self { dim, shifts: vec![DVector::zeros(dim); vertex_count - 1], omega_upper }
    }

    pub fn from_vector(dim: usize, vertex_count: usize, x: &[f64], pd_tol: f64) -> Result<Self> {
        let expected = dim * (vertex_count - 1) + upper_len(dim);
        if x.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "parameter vector has {} entries, expected {expected}",
                x.len()
            )));
        }
        let shifts =
            (0..vertex_count - 1).map(|i| DVector::from_column_slice(&x[i * dim..(i + 1) * dim])).collect();
        Self::new(dim, shifts, x[dim * (vertex_count - 1)..].to_vec(), pd_tol)
    }

    pub fn from_document(doc: &ParamsDocument, pd_tol: f64) -> Result<Self> {
        let dim = ((((8 * doc.omega_upper.len() + 1) as f64).sqrt() as usize).saturating_sub(1)) / 2;
        if upper_len(dim) != doc.omega_upper.len() || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "omega_upper length {} is not d(d+1)/2",
                doc.omega_upper.len()
            )));
        }
        let shifts = doc.t.iter().map(|t| DVector::from_column_slice(t)).collect();
        Self::new(dim, shifts, doc.omega_upper.clone(), pd_tol)
    }

    pub fn from_json(source: &str, pd_tol: f64) -> Result<Self> {
        let doc: ParamsDocument = serde_json::from_str(source)?;
        Self::from_document(&doc, pd_tol)
    }

    pub fn to_document(&self) -> ParamsDocument {
        ParamsDocument {
            t: self.shifts.iter().map(|t| t.iter().copied().collect()).collect(),
            omega_upper: self.omega_upper.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("params serialize")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.shifts.len() + 1
    }

    /// `t_i`, with `t_0 = 0`.
    pub fn shift(&self, i: usize) -> DVector<f64> {
        if i == 0 { DVector::zeros(self.dim) } else { self.shifts[i - 1].clone() }
    }

    pub fn shifts(&self) -> &[DVector<f64>] {
        &self.shifts
    }

    pub fn omega_upper(&self) -> &[f64] {
        &self.omega_upper
    }

    pub fn omega(&self) -> DMatrix<f64> {
        omega_from_upper(self.dim, &self.omega_upper)
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.shifts.iter().flat_map(|t| t.iter().copied()).chain(self.omega_upper.iter().copied()).collect()
    }

    fn check_graph(&self, g: &PeriodicGraph) -> Result<()> {
        if g.dim() != self.dim || g.vertex_count() != self.vertex_count() {
            return Err(Error::DimensionMismatch(format!(
                "params are for d={}, n={} but graph has d={}, n={}",
                self.dim,
                self.vertex_count(),
                g.dim(),
                g.vertex_count()
            )));
        }
        Ok(())
    }
}

pub fn omega_from_upper(dim: usize, upper: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |a, b| upper[upper_index(dim, a.min(b), a.max(b))])
}

/// Vertex positions plus lattice basis, before isometries are factored out.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPlacement {
    pub points: Vec<DVector<f64>>,
    /// Columns are the period vectors.
    pub lattice: DMatrix<f64>,
}

impl RawPlacement {
    /// Position of `v_i + γ`.
    pub fn position(&self, vertex: usize, label: &[i64]) -> DVector<f64> {
        let shift = DVector::from_iterator(label.len(), label.iter().map(|&v| v as f64));
        &self.points[vertex] + &self.lattice * shift
    }
}

/// Factors out isometries: `t_i = Λ⁻¹(p(v_i) − p(v_0))`, `ω = ΛᵗΛ`.
pub fn quotient_map(raw: &RawPlacement, pd_tol: f64) -> Result<PlacementParams> {
    let dim = raw.lattice.nrows();
    if raw.lattice.ncols() != dim || raw.points.is_empty() || raw.points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("raw placement shapes disagree".into()));
    }
    let inv = raw.lattice.clone().try_inverse().ok_or(Error::SingularLattice)?;
    let omega = raw.lattice.transpose() * &raw.lattice;
    let mut upper = vec![0.0; upper_len(dim)];
    for a in 0..dim {
        for b in a..dim {
            upper[upper_index(dim, a, b)] = 0.5 * (omega[(a, b)] + omega[(b, a)]);
        }
    }
    let base = &raw.points[0];
    let shifts = raw.points[1..].iter().map(|p| &inv * (p - base)).collect();
    PlacementParams::new(dim, shifts, upper, pd_tol).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SingularLattice,
        other => other,
    })
}

/// Canonical section of the quotient map: `Λ` is the upper-triangular
/// Cholesky factor of `ω` with positive diagonal, and `p(v_0) = 0`.
pub fn realize(params: &PlacementParams, pd_tol: f64) -> Result<RawPlacement> {
    let lattice = linalg::cholesky_upper(&params.omega(), pd_tol).ok_or(Error::NotPositiveDefinite)?;
    let points = (0..params.vertex_count()).map(|i| &lattice * params.shift(i)).collect();
    Ok(RawPlacement { points, lattice })
}

/// Squared edge lengths in edge order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeLengthVector {
    #[serde(rename = "lengths_sq")]
    pub values: Vec<f64>,
}

/// Arithmetic edge vector `t_j + n_ij − t_i` for every edge, from a raw parameter vector.
fn edge_vectors(g: &PeriodicGraph, x: &[f64]) -> Vec<DVector<f64>> {
    let d = g.dim();
    let shift = |i: usize| {
        if i == 0 { DVector::zeros(d) } else { DVector::from_column_slice(&x[(i - 1) * d..i * d]) }
    };
    g.edges()
        .iter()
        .map(|e| {
            let label = DVector::from_iterator(d, e.label.iter().map(|&v| v as f64));
            shift(e.head) + label - shift(e.tail)
        })
        .collect()
}

fn omega_of_vector(g: &PeriodicGraph, x: &[f64]) -> DMatrix<f64> {
    let d = g.dim();
    omega_from_upper(d, &x[d * (g.vertex_count() - 1)..])
}

/// Squared lengths at a raw parameter vector (no positivity check).
pub fn squared_lengths_at(g: &PeriodicGraph, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), g.parameter_dim());
    let omega = omega_of_vector(g, x);
    edge_vectors(g, x).iter().map(|w| w.dot(&(&omega * w))).collect()
}

/// Jacobian of [`squared_lengths_at`] (no positivity check).
pub fn rigidity_matrix_at(g: &PeriodicGraph, x: &[f64]) -> DMatrix<f64> {
    assert_eq!(x.len(), g.parameter_dim());
    let d = g.dim();
    let omega = omega_of_vector(g, x);
    let t_cols = d * (g.vertex_count() - 1);
    let mut jac = DMatrix::zeros(g.edge_count(), g.parameter_dim());
    for (r, (e, w)) in g.edges().iter().zip(edge_vectors(g, x)).enumerate() {
        if !e.is_loop() {
            let grad = 2.0 * (&omega * &w);
            for k in 0..d {
                if e.head > 0 {
                    jac[(r, (e.head - 1) * d + k)] += grad[k];
                }
                if e.tail > 0 {
                    jac[(r, (e.tail - 1) * d + k)] -= grad[k];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let factor = if a == b { 1.0 } else { 2.0 };
                jac[(r, t_cols + upper_index(d, a, b))] = factor * w[a] * w[b];
            }
        }
    }
    jac
}

pub fn edge_lengths_sq(params: &PlacementParams, g: &PeriodicGraph) -> Result<EdgeLengthVector> {
    params.check_graph(g)?;
    Ok(EdgeLengthVector { values: squared_lengths_at(g, &params.to_vector()) })
}

/// Jacobian of the squared-length map; columns follow the parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidityMatrix {
    pub entries: DMatrix<f64>,
}

impl RigidityMatrix {
    pub fn rank(&self, rel_tol: f64) -> usize {
        linalg::numerical_rank(&self.entries, rel_tol)
    }
}

pub fn rigidity_matrix(params: &PlacementParams, g: &PeriodicGraph) -> Result<RigidityMatrix> {
    params.check_graph(g)?;
    Ok(RigidityMatrix { entries: rigidity_matrix_at(g, &params.to_vector()) })
}

/// Dimension of the space of infinitesimal flexes modulo isometries.
pub fn flex_dimension(params: &PlacementParams, g: &PeriodicGraph, rank_rel_tol: f64) -> Result<usize> {
    let r = rigidity_matrix(params, g)?;
    Ok(g.parameter_dim() - r.rank(rank_rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::nets;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn upper_layout() {
        assert_eq!(upper_index(2, 0, 0), 0);
        assert_eq!(upper_index(2, 0, 1), 1);
        assert_eq!(upper_index(2, 1, 1), 2);
        let order: Vec<usize> =
            (0..3).flat_map(|a| (a..3).map(move |b| upper_index(3, a, b))).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4, 5]);
        let order: Vec<usize> =
            (0..4).flat_map(|a| (a..4).map(move |b| upper_index(4, a, b))).collect();
        assert_eq!(order, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn quotient_map_examples() {
        let raw = RawPlacement { points: vec![v(&[3.0, -1.0])], lattice: DMatrix::identity(2, 2) };
        let p = quotient_map(&raw, 1e-10).unwrap();
        assert!(p.shifts().is_empty());
        assert_eq!(p.omega_upper(), &[1.0, 0.0, 1.0]);

        let raw = RawPlacement {
            points: vec![v(&[0.2, 0.1]), v(&[1.2, 0.6])],
            lattice: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        };
        let p = quotient_map(&raw, 1e-10).unwrap();
        assert!((p.shift(1) - v(&[0.5, 0.5])).amax() < 1e-15);
        assert_eq!(p.omega_upper(), &[4.0, 0.0, 1.0]);

        let singular = RawPlacement {
            points: vec![v(&[0.0, 0.0])],
            lattice: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]),
        };
        assert!(matches!(quotient_map(&singular, 1e-10), Err(Error::SingularLattice)));
    }

    #[test]
    fn realize_examples() {
        let p = PlacementParams::standard(2, 1);
        let raw = realize(&p, 1e-10).unwrap();
        assert_eq!(raw.lattice, DMatrix::identity(2, 2));
        assert_eq!(raw.points[0], v(&[0.0, 0.0]));

        let p = PlacementParams::new(2, vec![v(&[0.5, 0.5])], vec![4.0, 0.0, 1.0], 1e-10).unwrap();
        let raw = realize(&p, 1e-10).unwrap();
        assert_eq!(raw.lattice, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(raw.points[1], v(&[1.0, 0.5]));

        assert!(matches!(
            PlacementParams::new(2, vec![], vec![1.0, 2.0, 1.0], 1e-10),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn squared_lengths_examples() {
        let sq = nets::square();
        let p = PlacementParams::standard(2, 1);
        assert_eq!(edge_lengths_sq(&p, &sq).unwrap().values, vec![1.0, 1.0]);

        let sd = nets::square_with_diagonal();
        let p = PlacementParams::new(2, vec![], vec![1.0, 0.5, 1.0], 1e-10).unwrap();
        assert_eq!(edge_lengths_sq(&p, &sd).unwrap().values, vec![1.0, 1.0, 3.0]);

        let hc = nets::honeycomb();
        let p = PlacementParams::new(2, vec![v(&[0.5, 0.5])], vec![1.0, 0.0, 1.0], 1e-10).unwrap();
        assert_eq!(edge_lengths_sq(&p, &hc).unwrap().values, vec![0.5, 2.5, 2.5]);

        assert!(matches!(edge_lengths_sq(&p, &sq), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn square_rigidity_rows() {
        let sq = nets::square();
        let p = PlacementParams::new(2, vec![], vec![2.0, 0.3, 1.5], 1e-10).unwrap();
        let r = rigidity_matrix(&p, &sq).unwrap();
        assert_eq!(r.entries, DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        assert_eq!(r.rank(1e-8), 2);
        assert_eq!(flex_dimension(&p, &sq, 1e-8).unwrap(), 1);
        assert_eq!(flex_dimension(&p, &nets::square_with_diagonal(), 1e-8).unwrap(), 0);
    }

    #[test]
    fn honeycomb_rank() {
        let hc = nets::honeycomb();
        let p = PlacementParams::new(2, vec![v(&[0.5, 0.5])], vec![1.0, 0.0, 1.0], 1e-10).unwrap();
        assert_eq!(rigidity_matrix(&p, &hc).unwrap().rank(1e-8), 3);
        assert_eq!(flex_dimension(&p, &hc, 1e-8).unwrap(), 2);
    }

    #[test]
    fn document_round_trip() {
        let p = PlacementParams::new(2, vec![v(&[0.25, -0.5])], vec![2.0, 0.1, 1.0], 1e-10).unwrap();
        let back = PlacementParams::from_json(&p.to_json(), 1e-10).unwrap();
        assert_eq!(back, p);
        assert!(PlacementParams::from_json(r#"{"t":[],"omega_upper":[1,0]}"#, 1e-10).is_err());
    }
}
