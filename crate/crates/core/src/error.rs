use thiserror::Error;

/// Failure modes shared by every computation in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Evaluation exactly at a non-analytic point (band edge, van Hove point, pole).
    #[error("singular point: {0}")]
    Singularity(String),
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative or adaptive scheme did not reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A real pole of the add-atom Green function lies outside the band.
    #[error("bound state present at energy {energy} (weight {weight:e}); decomposition needs an extra residue")]
    BoundState { energy: f64, weight: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that signal numerical trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence(_))
    }
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
