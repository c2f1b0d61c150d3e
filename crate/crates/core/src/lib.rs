//! Polyak minorant method for convex optimization problems with a known
//! optimal value.

pub mod atoms;
pub mod linalg;
pub mod minorant;
pub mod oracle;
pub mod problems;
pub mod projection;
pub mod rng;
pub mod solver;

pub use atoms::{dcp_minorant, dcp_verify, AffineArg, Atom, EigVariant, ExprNode};
pub use minorant::{AffineCut, CutBlock, CutPool};
pub use oracle::{Oracle, OracleError};
pub use projection::{assemble, project_dual, project_primal, ProjectionProblem};
pub use rng::SeededRng;
pub use solver::{pmm_alternating, pmm_solve, ProblemSpec, SolveResult, SolverConfig, Status, Variant};
