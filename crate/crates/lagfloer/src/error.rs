use thiserror::Error;

/// Every failure the library reports. Verification outcomes that are
/// expected to fail on some inputs (relation defects, criteria, obstructions)
/// are returned as report values instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("incompatible rings: {0}")]
    IncompatibleRing(String),

    #[error("not invertible: {0}")]
    NotInvertible(String),

    #[error("flavor violation: {0}")]
    FlavorViolation(String),

    #[error("unknown basis label: {0}")]
    UnknownBasis(String),

    #[error("duplicate basis label: {0}")]
    DuplicateLabel(String),

    #[error("degree violation: {0}")]
    DegreeViolation(String),

    #[error("not a complex: d∘d is nonzero in degree {0}")]
    NotAComplex(i64),

    #[error("gapped violation: {0}")]
    GappedViolation(String),

    #[error("not in monoid: {0}")]
    NotInMonoid(String),

    #[error("malformed morphism: {0}")]
    MalformedMorphism(String),

    #[error("chain mismatch: {0}")]
    ChainMismatch(String),

    #[error("role mismatch: expected {expected}, found {found}")]
    RoleMismatch { expected: String, found: String },

    #[error("divergent twist: {0}")]
    DivergentTwist(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("not a cycle: {0}")]
    NonCycle(String),

    #[error("inconsistent presentation: {0}")]
    InconsistentPresentation(String),

    #[error("label collision: {0}")]
    LabelCollision(String),

    #[error("degenerate phase at index {0}: r+ - r- is an integer")]
    DegeneratePhase(usize),

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("undefined sign: {0}")]
    UndefinedSign(String),

    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("missing eta: {0}")]
    MissingEta(String),

    #[error("antisymmetry violation: {0}")]
    Antisymmetry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
