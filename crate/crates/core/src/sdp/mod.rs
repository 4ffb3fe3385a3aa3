//! The two semidefinite relaxations as linear systems over one PSD Gram
//! matrix, with a checker, a feasibility solver and vector factorisation.

mod factor;
mod gram;
mod polish;
mod problem;
mod solver;

pub use factor::{gram_to_vectors, VectorSolution, EPS_FAC, EPS_PSD};
pub use gram::{check_feasibility, indicator_gram, weak_gap_solution, GramMatrix, ViolationReport};
pub use problem::{
    build_strong_relaxation, build_weak_relaxation, ConstraintKind, Layout, LinearConstraint, RelaxationKind,
    Relation, SdpProblem,
};
pub use solver::{
    solve_feasibility, AlternatingProjections, FeasibilityBackend, FeasibilityOutcome, FeasibilityStatus,
    SolverConfig, ProjectionMethod,
};
