use thiserror::Error;

/// Errors produced by the analysis pipeline.
///
/// The variants are grouped so that the CLI can map them onto stable exit
/// codes: I/O and validation problems, genericity failures, numerical
/// non-convergence, and structural contradictions are distinguishable by
/// callers scripting around the binary.
#[derive(Debug, Error)]
pub enum SkewError {
    /// Malformed input: inadmissible word, bad matrix shape, mismatched
    /// binning, and similar caller mistakes.
    #[error("input error: {0}")]
    Input(String),

    /// The chain (or a derived chain) violates a structural requirement,
    /// e.g. a non-transitive adjacency for which the stationary vector is
    /// not unique.
    #[error("structure error: {0}")]
    Structure(String),

    /// A genericity condition failed or an operation that requires
    /// genericity found a degenerate configuration.
    #[error("genericity error: {0}")]
    Genericity(String),

    /// An iterative computation did not reach its tolerance.
    #[error("convergence error: {0} (last gap {gap:e})", gap = .1)]
    Convergence(String, f64),

    /// A point was outside the image of a fiber map, so the inverse is
    /// undefined there.
    #[error("inverse undefined: {0} is outside the image [{1}, {2}]")]
    InverseDomain(f64, f64, f64),

    /// The trapping construction did not produce a strictly trapping
    /// domain for the given parameters; retry with the suggested ones.
    #[error("trapping construction failed; retry with epsilon={epsilon:e}, delta={delta:e}")]
    Retry { epsilon: f64, delta: f64 },

    /// A bounded word search exhausted its depth/beam caps.
    #[error("search cap exceeded: {0}")]
    SearchCap(String),

    /// A parameter is outside its usable range (e.g. a smoothing scale
    /// that would clip too much mass).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The computed structure contradicts the classification (e.g. a gap
    /// with no repeller, or attractors/repellers failing to alternate).
    #[error("structural contradiction: {0}")]
    Contradiction(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SkewError>;
