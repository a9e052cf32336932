use core::fmt;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    Domain(&'static str),
    /// An unsupported or inconsistent configuration (method indices, sizes, options).
    Config(alloc::string::String),
    /// Dimensions of operands do not conform.
    Dimension {
        /// What was being combined.
        what: &'static str,
        /// Expected length or size.
        expected: usize,
        /// Length or size received.
        found: usize,
    },
    /// A matrix is exactly singular to working precision.
    Singular,
    /// A Crout factorization hit a (near-)zero pivot.
    Factorization {
        /// Zero-based pivot index.
        index: usize,
        /// Pivot value encountered.
        pivot: f64,
    },
    /// The auxiliary abscissae make `P̂_s` numerically singular.
    DegenerateAbscissae {
        /// Estimated condition number.
        condition: f64,
    },
    /// The auxiliary-abscissae root finder did not converge.
    RootFinding {
        /// Infinity norm of the last residual.
        residual: f64,
    },
    /// The small eigensolver did not converge.
    Eigen,
    /// Every candidate of an abscissa optimization failed.
    Optimization,
    /// A potential or its derivatives produced non-finite values.
    Evaluation,
    /// Not enough valid data to measure a convergence order.
    Measurement(&'static str),
}

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "argument outside domain: {what}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Dimension {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {expected}, found {found}"
            ),
            Error::Singular => f.write_str("matrix is singular"),
            Error::Factorization { index, pivot } => {
                write!(
                    f,
                    "Crout factorization broke down at pivot {index} ({pivot:e})"
                )
            }
            Error::DegenerateAbscissae { condition } => {
                write!(
                    f,
                    "auxiliary abscissae are degenerate (condition estimate {condition:e})"
                )
            }
            Error::RootFinding { residual } => {
                write!(
                    f,
                    "abscissae root finding did not converge (residual {residual:e})"
                )
            }
            Error::Eigen => f.write_str("eigenvalue iteration did not converge"),
            Error::Optimization => f.write_str("no abscissa candidate could be evaluated"),
            Error::Evaluation => f.write_str("potential evaluation produced non-finite values"),
            Error::Measurement(msg) => write!(f, "order measurement failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
