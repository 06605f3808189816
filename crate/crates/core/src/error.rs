use thiserror::Error;

/// Byte range `[start, end)` into a DSL source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable index {0} out of range 0..4")]
    VarOutOfRange(usize),
    #[error("multi-index of order {requested} exceeds available jet order {available}")]
    OrderExceeded { requested: usize, available: usize },
    #[error("division by a value near zero{}", fmt_span(.span))]
    DivisionNearZero { span: Option<Span> },
    #[error("logarithm of zero{}", fmt_span(.span))]
    LogOfZero { span: Option<Span> },
    #[error("logarithm of a negative number in real mode{}", fmt_span(.span))]
    LogOfNegative { span: Option<Span> },
    #[error("point too close to a singularity of the function")]
    SingularSampling,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("non-integer exponent at byte {offset}")]
    NonIntegerExponent { offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("imaginary unit used in real mode")]
    ImaginaryInRealMode,
    #[error("metric is degenerate at the sample point")]
    DegenerateMetric,
    #[error("root clustering is ambiguous at the requested tolerance")]
    IllConditioned,
    #[error("generating spinor vanishes at the sample point")]
    ZeroSpinor,
    #[error("C^(3) and C^(2) both vanish; no second-congruence candidate")]
    BothLeadingZero,
    #[error("intersection of two nonexpanding congruences marked `{0}`")]
    InconsistentOptics(String),
    #[error("slot `{slot}` may not depend on coordinate `{coordinate}`")]
    ArityViolation { slot: String, coordinate: String },
    #[error("slot `{0}` has no binding")]
    UnboundSlot(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("implicit equation solve did not converge")]
    ImplicitSolveFailed,
    #[error("every candidate sample point was singular")]
    SamplingFailed,
    #[error("metric file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn fmt_span(span: &Option<Span>) -> String {
    match span {
        Some(s) => format!(" in bytes {}..{}", s.start, s.end),
        None => String::new(),
    }
}

impl Error {
    /// True for errors that mean "this sample point is bad, draw another".
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            Error::DivisionNearZero { .. }
                | Error::LogOfZero { .. }
                | Error::LogOfNegative { .. }
                | Error::SingularSampling
                | Error::DegenerateMetric
                | Error::IllConditioned
                | Error::ZeroSpinor
                | Error::ImplicitSolveFailed
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
