//! Function oracles: values and minorants of convex functions on `R^n`.

use thiserror::Error;

use crate::atoms::AtomError;
use crate::minorant::{CutPool, MinorantError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error(transparent)]
    Minorant(#[from] MinorantError),
    #[error("point is outside the function domain")]
    OutsideDomain,
    #[error("{0}")]
    Other(String),
}

/// A convex function accessed through its values and minorants.
///
/// `minorant(z)` returns a pool whose evaluation is a lower bound on the
/// function everywhere and equals it at `z`; its `tight_value` field holds
/// the function value at `z`.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64, OracleError>;
    fn minorant(&self, z: &[f64]) -> Result<CutPool, OracleError>;
}
