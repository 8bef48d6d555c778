use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by all operations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Minimum Cholesky pivot for a Gram matrix to count as positive definite.
    pub pd_tol: f64,
    /// Absolute residual allowed in the symmetry conditions.
    pub sym_tol: f64,
    /// Relative singular-value cutoff for numerical rank.
    pub rank_rel_tol: f64,
    /// Maximum squared-length drift along a traced deformation.
    pub path_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { pd_tol: 1e-10, sym_tol: 1e-9, rank_rel_tol: 1e-8, path_tol: 1e-8 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.pd_tol, self.sym_tol, self.rank_rel_tol, self.path_tol];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Precondition("tolerances must be positive and finite".into()))
        }
    }
}

/// Search caps for combinatorial enumerations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub automorphism_nodes: usize,
    pub coset_index: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { automorphism_nodes: 1_000_000, coset_index: 64 }
    }
}
