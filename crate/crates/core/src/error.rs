use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{series} did not converge within {terms} terms (last term magnitude {last_term:e})")]
    Truncation {
        series: &'static str,
        terms: usize,
        last_term: f64,
    },

    #[error("{series}: Pochhammer denominator vanishes at series index {index}")]
    Pole { series: &'static str, index: usize },

    #[error("{what} overflowed the double-precision range")]
    Overflow { what: &'static str },

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {abs_error_estimate:e})")]
    Quadrature {
        subdivisions: usize,
        abs_error_estimate: f64,
    },

    #[error("sample path exceeded the safety cap of {cap} events")]
    Runaway { cap: u64 },

    #[error("infeasible conditioning: acceptance rate {rate:e} after {attempts} cycles")]
    InfeasibleConditioning { rate: f64, attempts: u64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    /// True for failures of a numerical method (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. } | Error::Overflow { .. } | Error::Quadrature { .. }
        )
    }
}
