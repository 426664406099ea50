//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors surfaced by geometry, flatness, distortion, family, and extension
/// routines.
#[derive(Debug, Clone, Error)]
pub enum FlatextError {
    /// Interpolation nodes are affinely dependent (simplex volume below
    /// tolerance).
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    /// A flatness query was made at a point that is not a member of the
    /// sampled set.
    #[error("point not in set: distance to nearest sample {0:.3e}")]
    PointNotInSet(f64),

    /// A requested scale dips below the sampling resolution of the data.
    #[error("scale below resolution: requested {requested:.3e}, resolution {resolution:.3e}")]
    ScaleBelowResolution { requested: f64, resolution: f64 },

    /// The sampled map collapses two points, so the weak quasisymmetry
    /// constant is infinite.
    #[error("map not injective on samples: indices {0} and {1} collide")]
    NotInjective(usize, usize),

    /// Similarity fitting received affinely dependent samples.
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    /// A family member has vanishing linear part, so relative compatibility
    /// is undefined.
    #[error("zero linear part at family entry (base {0}, scale index {1})")]
    ZeroLinearPart(usize, usize),

    /// An inequality verifier was called with inputs violating the cited
    /// hypothesis.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// Hull-volume computation requested in an unsupported dimension.
    #[error("unsupported dimension {0} for hull volume (simplices still supported)")]
    UnsupportedDimension(usize),

    /// A map sample required by an interpolation node is missing.
    #[error("missing sample at required node {0}")]
    MissingSamples(String),

    /// The compatibility constant is too large for the requested transform.
    #[error("epsilon too large: {eps:.3e} exceeds limit {limit:.3e}")]
    EpsilonTooLarge { eps: f64, limit: f64 },

    /// Whitney decomposition cannot resolve the set at the requested depth.
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    /// A Whitney cube's map could not be resolved from the family.
    #[error("unresolvable cube: {0}")]
    UnresolvableCube(String),

    /// A Taylor-branch query landed inside the resolution collar.
    #[error("collar violation: query at distance {0:.3e} from the set")]
    CollarViolation(f64),

    /// A generator specification is invalid.
    #[error("bad generator spec: {0}")]
    BadSpec(String),

    /// A scalar argument is outside the domain of the formula.
    #[error("domain error: {0}")]
    DomainError(String),
}

pub type Result<T> = std::result::Result<T, FlatextError>;
