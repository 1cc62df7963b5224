use num_complex::Complex64;
use thiserror::Error;

/// Error taxonomy shared by every module in the crate.
///
/// The split matters operationally: `Convergence` means the math is fine but
/// a quadrature could not reach the requested tolerance, `Domain`/`Strip`
/// mean the inputs never defined a convergent object in the first place, and
/// `Validation` means a constructed density failed its statistical checks.
#[derive(Debug, Clone, Error)]
pub enum IhatError {
    /// Gamma evaluated within `CUT_EPSILON` of a nonpositive integer.
    #[error("log-gamma pole: argument {0} is within cut epsilon of a nonpositive integer")]
    Pole(Complex64),

    /// Log-gamma evaluated on the negative real axis away from a pole; no
    /// branch is chosen for callers, they must move off the cut themselves.
    #[error("log-gamma branch cut: argument {0} lies on the negative real axis")]
    BranchCut(Complex64),

    /// Structurally invalid input (bad coefficient sign, malformed grid, ...).
    #[error("domain: {0}")]
    Domain(String),

    /// Contour shift or transform point outside the admissible strip.
    #[error("strip: {0}")]
    Strip(String),

    /// Divergent integral, too-slow tail decay, or exhausted node budget.
    #[error("convergence: {0}")]
    Convergence(String),

    /// A constructed density failed normalization or nonnegativity checks.
    #[error("validation: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, IhatError>;
