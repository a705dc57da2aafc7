use thiserror::Error;

/// Errors surfaced by the library.
///
/// Validation errors carry enough context to point at the offending input
/// (facet index, vertex coordinates, ...). Numerical solvers report valid
/// empty outcomes through their result types, not through this enum.
#[derive(Debug, Error)]
pub enum Error {
    // --- scalar / series arithmetic ---
    #[error("not a unit: valuation is {0}, need exactly 0 with nonzero lead")]
    NotAUnit(String),
    #[error("exact coefficient mode cannot represent {0}")]
    ExactConstant(&'static str),
    #[error("series truncated at {0}; operation needs precision {1}")]
    TruncationTooShort(String, String),
    #[error("operation on an untruncated series would not terminate; truncate first")]
    InfinitePrecision,
    #[error("seed is not a root of the reduced polynomial (|p̄(seed)| = {0:.3e})")]
    SeedNotRoot(f64),
    #[error("seed is a degenerate root of the reduced polynomial (|p̄'(seed)| = {0:.3e})")]
    DegenerateSeed(f64),

    // --- polytope validation ---
    #[error("polytope is unbounded (direction {0} not enclosed)")]
    Unbounded(String),
    #[error("polytope is not full-dimensional (affine hull of vertices has dimension {0})")]
    NotFullDim(usize),
    #[error("polytope is not smooth at vertex ({0}): {1}")]
    NotSmooth(String, String),
    #[error("malformed polytope data: {0}")]
    Malformed(String),

    // --- evaluation points ---
    #[error("point ({0}) is not in the interior of the polytope (ℓ_{1} = {2})")]
    NotInterior(String, usize, String),
    #[error("point has a zero coordinate at index {0}")]
    ZeroCoordinate(usize),

    // --- solvers / correspondence ---
    #[error("full fiber enumeration supports n ≤ 2; got n = {0} (pass explicit points instead)")]
    DimensionUnsupported(usize),
    #[error("per-level Hessian block at level {0} is singular (|det| = {1:.3e})")]
    DegenerateHessian(usize, f64),
    #[error("lift requires a strongly nondegenerate solution; classification was {0}")]
    NotStrong(String),
    #[error("normal matrix of the first n facets is singular; cannot solve for the position")]
    SingularNormalMatrix,
    #[error("relation check failed: {0}")]
    RelationFailed(String),

    // --- internal invariants ---
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
