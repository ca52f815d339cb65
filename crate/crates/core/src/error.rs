use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{name} = {value} is out of domain: expected {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// The incomplete-beta continued fraction did not settle.
    #[error("continued fraction for I_{z}({a}, {b}) did not converge in {iterations} iterations")]
    Accuracy {
        z: f64,
        a: f64,
        b: f64,
        iterations: usize,
    },
    #[error("radius search failed: {0}")]
    Convergence(&'static str),
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("invalid input: {0}")]
    Invalid(&'static str),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
