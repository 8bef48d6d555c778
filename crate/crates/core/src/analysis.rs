//! Rigidity counts, symmetry-restricted rank analysis and deformation tracing.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::graph::PeriodicGraph;
use crate::linalg;
use crate::placement::{self, rigidity_matrix_at, squared_lengths_at, upper_index, upper_len, PlacementParams};
use crate::symmetry::{self, edge_orbit_quotient, fixed_locus, AffineSubspace, Automorphism};

pub const DEFAULT_SEED: u64 = 0x5eed_2011;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BezoutReport {
    /// Edges joining distinct vertex orbits (cubic constraints).
    pub mu: usize,
    pub m: usize,
    pub loops: usize,
    /// `3^μ`, decimal.
    #[serde(with = "biguint_string")]
    pub bound: BigUint,
    /// `m = dn + C(d,2)`.
    pub minimally_rigid_count: bool,
    /// `dn − d ≤ μ ≤ m`.
    pub range_holds: bool,
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of edge orbits of a minimally rigid `d`-periodic graph on `n` vertex orbits.
pub fn minimally_rigid_edge_count(dim: usize, vertex_count: usize) -> usize {
    dim * vertex_count + dim * dim.saturating_sub(1) / 2
}

pub fn bezout_bound(g: &PeriodicGraph) -> BezoutReport {
    let m = g.edge_count();
    let loops = g.loop_count();
    let mu = m - loops;
    let (d, n) = (g.dim(), g.vertex_count());
    BezoutReport {
        mu,
        m,
        loops,
        bound: BigUint::from(3u32).pow(mu as u32),
        minimally_rigid_count: m == minimally_rigid_edge_count(d, n),
        range_holds: d * n - d <= mu && mu <= m,
    }
}

/// Random parameter point: `t` uniform in `[-1, 1]`, `ω = I + E` with `E`
/// small, symmetric, resampled until positive definite.
pub fn random_params(g: &PeriodicGraph, rng: &mut impl Rng, pd_tol: f64) -> PlacementParams {
    let d = g.dim();
    loop {
        let shifts = (1..g.vertex_count())
            .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0)))
            .collect();
        let mut upper = vec![0.0; upper_len(d)];
        for a in 0..d {
            for b in a..d {
                let noise = rng.random_range(-0.25..=0.25);
                upper[upper_index(d, a, b)] = if a == b { 1.0 + noise } else { noise };
            }
        }
        if let Ok(p) = PlacementParams::new(d, shifts, upper, pd_tol) {
            return p;
        }
    }
}

/// Edge count test plus full rank at one of `trials` random points.
pub fn minimal_rigidity_check(g: &PeriodicGraph, trials: usize, seed: u64, tol: &Tolerances) -> bool {
    if g.edge_count() != minimally_rigid_edge_count(g.dim(), g.vertex_count()) {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).any(|_| {
        let p = random_params(g, &mut rng, tol.pd_tol);
        let r = rigidity_matrix_at(g, &p.to_vector());
        linalg::numerical_rank(&r, tol.rank_rel_tol) == g.edge_count()
    })
}

/// Squared-length map restricted to a fixed locus, one row per edge orbit.
#[derive(Clone, Debug)]
pub struct RestrictedSystem {
    pub locus: AffineSubspace,
    /// `|E/Σ| × r`.
    pub reduced_jacobian: DMatrix<f64>,
    pub orbit_classes: Vec<Vec<usize>>,
    pub rank: usize,
    pub flex_dim: usize,
}

pub fn symmetric_restriction(
    g: &PeriodicGraph,
    gens: &[Automorphism],
    point: &PlacementParams,
    tol: &Tolerances,
) -> Result<RestrictedSystem> {
    if point.dim() != g.dim() || point.vertex_count() != g.vertex_count() {
        return Err(Error::DimensionMismatch("point does not match graph".into()));
    }
    let fixed = fixed_locus(gens, g)?;
    let x = point.to_vector();
    for a in &fixed.group {
        if !symmetry::affine_action(a, g)?.to_f64().fixes(&x, tol.sym_tol) {
            return Err(Error::Precondition("point is not on the fixed locus".into()));
        }
    }
    let classes = edge_orbit_quotient(&fixed.group, g)?;
    let directions = fixed.locus.directions_f64();
    let pulled = rigidity_matrix_at(g, &x) * &directions;
    let r = fixed.locus.dim();
    for class in &classes {
        let lead = pulled.row(class[0]);
        for &e in &class[1..] {
            let scale = lead.amax().max(1.0);
            if (pulled.row(e) - lead).amax() > 1e-9 * scale {
                return Err(Error::Internal(format!(
                    "rows {} and {e} of one edge orbit differ on the locus",
                    class[0]
                )));
            }
        }
    }
    let reduced = DMatrix::from_fn(classes.len(), r, |i, j| pulled[(classes[i][0], j)]);
    let rank = linalg::numerical_rank(&reduced, tol.rank_rel_tol);
    Ok(RestrictedSystem {
        locus: fixed.locus,
        reduced_jacobian: reduced,
        orbit_classes: classes,
        rank,
        flex_dim: r - rank,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Accepted steps per direction.
    pub steps: usize,
    pub step_size: f64,
    pub max_newton: usize,
    pub min_step: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { steps: 25, step_size: 0.05, max_newton: 25, min_step: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StepsExhausted,
    /// `ω` got within `10·pd_tol` of the cone boundary.
    ConeBoundary,
    KernelChange,
    CorrectorFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Samples along the curve, ordered from the end of the backward branch to the
/// end of the forward branch; `samples[start_index]` is the start point.
#[derive(Clone, Debug, Default)]
pub struct DeformationPath {
    pub samples: Vec<PlacementParams>,
    pub step_stats: Vec<StepStats>,
    pub start_index: usize,
    pub terminations: Vec<Termination>,
}

impl DeformationPath {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest `|f(x) − f(start)|` over all samples.
    pub fn max_length_deviation(&self, g: &PeriodicGraph) -> f64 {
        let Some(start) = self.samples.get(self.start_index) else { return 0.0 };
        let target = squared_lengths_at(g, &start.to_vector());
        self.samples
            .iter()
            .flat_map(|s| {
                squared_lengths_at(g, &s.to_vector()).into_iter().zip(target.clone()).map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn csv_header(dim: usize, vertex_count: usize) -> String {
        let mut cols = Vec::new();
        for i in 1..vertex_count {
            for k in 1..=dim {
                cols.push(format!("t_{i}_{k}"));
            }
        }
        for a in 1..=dim {
            for b in a..=dim {
                cols.push(format!("omega_{a}{b}"));
            }
        }
        cols.join(",")
    }

    pub fn to_csv(&self, g: &PeriodicGraph) -> String {
        let mut out = Self::csv_header(g.dim(), g.vertex_count());
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.to_vector().iter().map(|v| format!("{v:.15e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

struct Tracer<'a> {
    g: &'a PeriodicGraph,
    origin: DVector<f64>,
    directions: DMatrix<f64>,
    target: DVector<f64>,
    opts: &'a TraceOptions,
    tol: &'a Tolerances,
    kernel_dim: usize,
}

struct Corrected {
    y: DVector<f64>,
    iterations: usize,
    residual: f64,
}

enum StepFailure {
    Boundary,
    Corrector,
}

impl Tracer<'_> {
    fn point(&self, y: &DVector<f64>) -> Vec<f64> {
        (&self.origin + &self.directions * y).iter().copied().collect()
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(squared_lengths_at(self.g, x)) - &self.target
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        rigidity_matrix_at(self.g, x) * &self.directions
    }

    fn kernel(&self, y: &DVector<f64>) -> DMatrix<f64> {
        linalg::kernel_basis(&self.jacobian(&self.point(y)), self.tol.rank_rel_tol)
    }

    fn interior(&self, x: &[f64]) -> bool {
        symmetry::omega_min_eigenvalue(self.g, x) >= 10.0 * self.tol.pd_tol
    }

    fn correct(&self, mut y: DVector<f64>) -> Option<Corrected> {
        let mut x = self.point(&y);
        let mut f = self.residual(&x);
        let mut res = f.amax();
        let goal = 1e-3 * self.tol.path_tol;
        let mut iterations = 0;
        while res > goal && iterations < self.opts.max_newton {
            iterations += 1;
            let jac = self.jacobian(&x);
            let delta = linalg::least_squares(&jac, &(-&f), self.tol.rank_rel_tol);
            let mut damping = 1.0;
            let mut improved = false;
            for _ in 0..12 {
                let trial_y = &y + damping * &delta;
                let trial_x = self.point(&trial_y);
                let trial_f = self.residual(&trial_x);
                let trial_res = trial_f.amax();
                if trial_res < res {
                    (y, x, f, res) = (trial_y, trial_x, trial_f, trial_res);
                    improved = true;
                    break;
                }
                damping *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (res <= self.tol.path_tol).then_some(Corrected { y, iterations, residual: res })
    }

    /// Unit vector of the kernel at `y` closest to `previous`.
    fn tangent(&self, y: &DVector<f64>, previous: &DVector<f64>) -> Option<DVector<f64>> {
        let k = self.kernel(y);
        if k.ncols() != self.kernel_dim {
            return None;
        }
        let mut t = &k * (k.transpose() * previous);
        if t.norm() < 1e-12 {
            t = k.column(0).into_owned();
            if t.dot(previous) < 0.0 {
                t = -t;
            }
        }
        Some(t.normalize())
    }

    fn branch(&self, tangent: DVector<f64>) -> (Vec<(DVector<f64>, StepStats)>, Termination) {
        let mut out = Vec::new();
        let mut y = DVector::zeros(self.directions.ncols());
        let mut tau = tangent;
        let mut h = self.opts.step_size;
        while out.len() < self.opts.steps {
            let Some(t) = self.tangent(&y, &tau) else {
                return (out, Termination::KernelChange);
            };
            tau = t;
            let outcome = loop {
                let predicted = &y + h * &tau;
                let attempt = match self.correct(predicted) {
                    Some(c) if (&c.y - &y).norm() <= 2.0 * h => {
                        if self.interior(&self.point(&c.y)) { Ok(c) } else { Err(StepFailure::Boundary) }
                    }
                    _ => {
                        if self.interior(&self.point(&(&y + h * &tau))) {
                            Err(StepFailure::Corrector)
                        } else {
                            Err(StepFailure::Boundary)
                        }
                    }
                };
                match attempt {
                    Ok(c) => break Ok(c),
                    Err(why) => {
                        h *= 0.5;
                        if h < self.opts.min_step {
                            break Err(why);
                        }
                    }
                }
            };
            match outcome {
                Ok(c) => {
                    let stats = StepStats { step: h, newton_iterations: c.iterations, residual: c.residual };
                    y = c.y;
                    out.push((y.clone(), stats));
                }
                Err(StepFailure::Boundary) => return (out, Termination::ConeBoundary),
                Err(StepFailure::Corrector) => return (out, Termination::CorrectorFailure),
            }
        }
        (out, Termination::StepsExhausted)
    }
}

/// Traces the fiber of the squared-length map through `start` in both
/// directions, optionally inside an affine locus containing `start`.
///
/// Returns an empty path when the start point admits no flex.
pub fn trace_deformation(
    g: &PeriodicGraph,
    start: &PlacementParams,
    locus: Option<&AffineSubspace>,
    opts: &TraceOptions,
    tol: &Tolerances,
) -> Result<DeformationPath> {
    if start.dim() != g.dim() || start.vertex_count() != g.vertex_count() {
        return Err(Error::DimensionMismatch("start point does not match graph".into()));
    }
    if !(opts.step_size > 0.0 && opts.min_step > 0.0) {
        return Err(Error::Precondition("step sizes must be positive".into()));
    }
    let x0 = DVector::from_vec(start.to_vector());
    let directions = match locus {
        Some(l) => {
            if l.ambient_dim() != g.parameter_dim() {
                return Err(Error::DimensionMismatch("locus lives in another parameter space".into()));
            }
            let d = l.directions_f64();
            let offset = &x0 - DVector::from_vec(l.base_f64());
            let coords = linalg::least_squares(&d, &offset, 1e-12);
            if (&d * coords - &offset).amax() > tol.sym_tol * offset.amax().max(1.0) {
                return Err(Error::Precondition("start point is not on the locus".into()));
            }
            d
        }
        None => DMatrix::identity(g.parameter_dim(), g.parameter_dim()),
    };
    let target = DVector::from_vec(squared_lengths_at(g, x0.as_slice()));
    let mut tracer = Tracer { g, origin: x0, directions, target, opts, tol, kernel_dim: 0 };
    let y0 = DVector::zeros(tracer.directions.ncols());
    let k0 = tracer.kernel(&y0);
    if k0.ncols() == 0 {
        return Ok(DeformationPath::default());
    }
    tracer.kernel_dim = k0.ncols();
    let mut t0 = k0.column(0).into_owned();
    let lead = t0.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if lead < 0.0 {
        t0 = -t0;
    }
    let (forward, fwd_end) = tracer.branch(t0.clone());
    let (backward, bwd_end) = tracer.branch(-t0);
    if forward.is_empty() && backward.is_empty() && fwd_end == Termination::CorrectorFailure
        && bwd_end == Termination::CorrectorFailure
    {
        return Err(Error::Numerical("corrector diverged at the start point".into()));
    }

    let to_params = |y: &DVector<f64>| {
        PlacementParams::from_vector(g.dim(), g.vertex_count(), &tracer.point(y), tol.pd_tol)
    };
    let mut samples = Vec::with_capacity(forward.len() + backward.len() + 1);
    let mut step_stats = Vec::with_capacity(forward.len() + backward.len());
    for (y, s) in backward.iter().rev() {
        samples.push(to_params(y)?);
        step_stats.push(s.clone());
    }
    let start_index = samples.len();
    samples.push(start.clone());
    for (y, s) in &forward {
        samples.push(to_params(y)?);
        step_stats.push(s.clone());
    }
    Ok(DeformationPath { samples, step_stats, start_index, terminations: vec![bwd_end, fwd_end] })
}

/// Counts and ranks for one framework, as exported by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub parameter_dim: usize,
    pub lengths_sq: Vec<f64>,
    pub rigidity_rank: usize,
    pub flex_dim: usize,
    pub minimally_rigid: bool,
    pub bezout: BezoutReport,
}

pub fn analyze(g: &PeriodicGraph, params: &PlacementParams, trials: usize, seed: u64, tol: &Tolerances) -> Result<AnalysisReport> {
    let lengths = placement::edge_lengths_sq(params, g)?;
    let rank = placement::rigidity_matrix(params, g)?.rank(tol.rank_rel_tol);
    Ok(AnalysisReport {
        d: g.dim(),
        n: g.vertex_count(),
        m: g.edge_count(),
        parameter_dim: g.parameter_dim(),
        lengths_sq: lengths.values,
        rigidity_rank: rank,
        flex_dim: g.parameter_dim() - rank,
        minimally_rigid: minimal_rigidity_check(g, trials, seed, tol),
        bezout: bezout_bound(g),
    })
}
