//! Deformation analysis of periodic bar-joint frameworks.
//!
//! A framework is a quotient graph with lattice labels plus a placement given by
//! vertex shifts and a Gram matrix. This crate computes edge lengths and their
//! Jacobian, enumerates graph automorphisms and their action on parameter
//! space, restricts the length map to symmetric loci, relaxes periodicity to
//! finite-index sublattices and traces one-parameter deformations.

pub mod analysis;
pub mod config;
pub mod error;
pub mod exact;
pub mod graph;
pub mod lattice;
pub mod linalg;
pub mod placement;
pub mod symmetry;

pub use analysis::{
    analyze, bezout_bound, minimal_rigidity_check, symmetric_restriction, trace_deformation, AnalysisReport,
    BezoutReport, DeformationPath, RestrictedSystem, Termination, TraceOptions,
};
pub use config::{Limits, Tolerances};
pub use error::{Error, ErrorClass, Result};
pub use exact::{IntMatrix, RatMatrix, Rational};
pub use graph::{nets, LabeledEdge, PeriodicGraph, SpanningTree, ValidationReport};
pub use lattice::{
    coset_representatives, intersect_symmetry_groups, relax_graph, relax_params, relax_params_exact, CosetReps,
    Relaxation, SublatticeMap,
};
pub use placement::{
    edge_lengths_sq, flex_dimension, quotient_map, realize, rigidity_matrix, EdgeLengthVector, PlacementParams,
    RawPlacement, RigidityMatrix,
};
pub use symmetry::{
    affine_action, enumerate_automorphisms, fixed_locus, generate_group, is_symmetry, realize_isometry,
    AffineMap, AffineSubspace, Automorphism, FixedLocus, IsometryWitness,
};
